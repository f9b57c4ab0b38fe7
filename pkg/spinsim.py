"""
Entry script: python spinsim.py <simulate|ensemble|lyapunov|validate> [options]
"""
from spin_cli.cli import main

if __name__ == "__main__":
    main()
