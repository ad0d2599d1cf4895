# Optimization problems module
