# Solver services package
