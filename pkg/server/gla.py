#!/usr/bin/env python
"""`gla` command line: the scenario commands (run, scenario, regress, bands) without manage.py."""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.dev')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the packages in requirements.txt "
            "into the active environment first."
        ) from exc
    execute_from_command_line(['gla', *sys.argv[1:]])


if __name__ == '__main__':
    main()
