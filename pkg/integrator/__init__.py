# Adaptive ODE integration package
