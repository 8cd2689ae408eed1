# src/nccw/__main__.py
from nccw.cli.app import main

if __name__ == "__main__":
    main()
