# Analytic module
