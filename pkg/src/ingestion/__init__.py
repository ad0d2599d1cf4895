# Data ingestion module
