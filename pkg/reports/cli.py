"""
Command-line entry point: `hindex-audit <analyze|simulate|metrics|render> ...`.

Runs the reports management commands and turns their outcome into an exit
code: 0 on success, 1 for analysis or input errors, 2 for usage errors.
"""

import os
import sys

SUBCOMMANDS = ('analyze', 'simulate', 'metrics', 'render')
USAGE = 'usage: hindex-audit {analyze,simulate,metrics,render} [options]\n'


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        sys.stderr.write(USAGE)
        return 0 if argv else 2
    if argv[0] not in SUBCOMMANDS:
        sys.stderr.write(USAGE)
        sys.stderr.write(f'hindex-audit: unknown command {argv[0]!r}\n')
        return 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'hindex_audit.settings')
    from django.core.management import execute_from_command_line

    try:
        execute_from_command_line(['hindex-audit', *argv])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
