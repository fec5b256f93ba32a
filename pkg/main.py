import sys
from ForwardJacobian import cli


if __name__ == "__main__":
    sys.exit(cli.main())
