# Collapse experiments, Monte Carlo sweeps and chaos measurement package
