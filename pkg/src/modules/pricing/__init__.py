# Pricing module
