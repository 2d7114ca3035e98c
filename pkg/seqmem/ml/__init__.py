# Dynamics, energy, learning and capacity experiments
