# Utilities module