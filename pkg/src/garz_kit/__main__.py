import sys

from garz_kit.main import main

if __name__ == "__main__":
    sys.exit(main())
