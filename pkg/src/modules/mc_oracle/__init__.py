# Monte Carlo oracle module
