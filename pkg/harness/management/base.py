"""
Shared plumbing for the harness management commands: ``--config`` files,
flag precedence and exit codes.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_USAGE, DomainError, NumericalFailure
from core.io import read_json
from harness.serializers import HarnessConfigSerializer


def parse_assignments(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    """``KEY=VALUE`` pairs; values are read as JSON when they parse, else kept as text."""
    parsed: Dict[str, Any] = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise CommandError(f"Expected KEY=VALUE, got '{item}'", returncode=EXIT_USAGE)
        try:
            parsed[key] = json.loads(raw)
        except json.JSONDecodeError:
            parsed[key] = raw
    return parsed


class HarnessCommand(BaseCommand):
    """
    Base class for harness commands.

    Usage errors exit with code 1, ``DomainError`` with 2 and
    ``NumericalFailure`` with 3.
    """

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def usage_error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

        parser.error = usage_error
        parser.add_argument('--config', help='JSON file with default values for the flags')
        return parser

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except NumericalFailure as exc:
            raise CommandError(f"❌ {exc}", returncode=EXIT_NUMERICAL) from exc
        except DomainError as exc:
            raise CommandError(f"❌ {exc}", returncode=EXIT_DOMAIN) from exc

    def load_config(self, options) -> Dict[str, Any]:
        path = options.get('config')
        if not path:
            return {}
        try:
            document = read_json(path)
        except (OSError, ValueError) as exc:
            raise CommandError(f"Cannot read config file {path}: {exc}", returncode=EXIT_USAGE) from exc
        serializer = HarnessConfigSerializer(data=document)
        if not serializer.is_valid():
            raise CommandError(f"Invalid config file {path}: {serializer.errors}", returncode=EXIT_USAGE)
        return dict(serializer.validated_data)

    def resolve(self, options, config: Dict[str, Any], key: str, default: Any = None) -> Any:
        """Flag value, else config file value, else ``default``."""
        value = options.get(key)
        if value is not None:
            return value
        return config.get(key, default)

    def output_dir(self, options, config: Dict[str, Any]) -> Path:
        return Path(self.resolve(options, config, 'out', settings.MULTIRATE_OUTPUT_DIR))

    def require(self, value: Any, flag: str) -> Any:
        if value is None:
            raise CommandError(f"{flag} is required (flag or config file)", returncode=EXIT_USAGE)
        return value
