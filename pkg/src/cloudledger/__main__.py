"""Allow `python -m cloudledger ...` as a CLI entry point."""

from .cli import main

main()
