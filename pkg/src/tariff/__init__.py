# Tariff billing module
