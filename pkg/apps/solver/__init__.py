# Solver app
