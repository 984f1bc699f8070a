"""
Main entry point for the bundle pricing toolkit.
"""

from src.cli import cli

if __name__ == "__main__":
    cli()
