# Lattice module
