"""
Inspect a Butcher table: coefficients, classical order and the extra
conditions of the multirate constructions.
"""

import numpy as np

from butcher.conditions import describe_table, family_condition_curves
from butcher.serializers import ButcherTableSerializer
from butcher.tables import SHIPPED_TABLES, butcher_family, get_table
from core.exceptions import EXIT_USAGE
from core.io import read_json, write_json
from django.core.management.base import CommandError
from harness.management.base import HarnessCommand


class Command(HarnessCommand):
    help = 'Print a Butcher table with its order and multirate condition residuals'

    def add_arguments(self, parser):
        parser.add_argument('name', nargs='?', help=f"Shipped table ({', '.join(SHIPPED_TABLES)})")
        parser.add_argument('--family', nargs=2, type=float, metavar=('C2', 'C3'),
                            help='Member of the two-parameter fourth-order family')
        parser.add_argument('--file', help='Verify a table stored as JSON {name, A, b, c}')
        parser.add_argument('--json', dest='json_out', help='Also write the report to this JSON file')

    def handle(self, *args, **options):
        table = self._table(options)
        summary = describe_table(table)

        np.set_printoptions(precision=16, suppress=False, linewidth=120)
        self.stdout.write(f"📋 Table {table.name} ({table.s} stages)")
        self.stdout.write(f"A =\n{table.A}")
        self.stdout.write(f"b = {table.b}")
        self.stdout.write(f"c = {table.c}")
        self.stdout.write(self.style.SUCCESS(f"✅ Classical order: {summary['order']}"))
        self.stdout.write(f"   rfsmr3 residual: {summary['rfsmr3']:.3e}")
        if 'rmis4' in summary:
            self.stdout.write(f"   rmis4 residual:  {summary['rmis4']:.3e}")

        report = dict(ButcherTableSerializer(table).data, **summary)
        if options['family']:
            mis_curve, rmis_curve = family_condition_curves(*options['family'])
            self.stdout.write(f"   MIS family curve:  {mis_curve:.3e}")
            self.stdout.write(f"   RMIS family curve: {rmis_curve:.3e}")
            report.update(mis_curve=mis_curve, rmis_curve=rmis_curve)

        if options['json_out']:
            path = write_json(options['json_out'], report)
            self.stdout.write(f"💾 Wrote {path}")

    def _table(self, options):
        sources = [options['name'] is not None, options['family'] is not None, options['file'] is not None]
        if sum(sources) != 1:
            raise CommandError('Give exactly one of NAME, --family or --file', returncode=EXIT_USAGE)
        if options['family']:
            return butcher_family(*options['family'])
        if options['file']:
            serializer = ButcherTableSerializer(data=read_json(options['file']))
            if not serializer.is_valid():
                raise CommandError(f"Invalid table file: {serializer.errors}", returncode=EXIT_USAGE)
            return serializer.save()
        return get_table(options['name'])
