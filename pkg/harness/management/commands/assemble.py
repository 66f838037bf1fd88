"""
Build the GARK tableau of a multirate method, check its order conditions
and export it as JSON.
"""

from pathlib import Path

from django.conf import settings

from gark.conditions import check_conditions
from gark.serializers import ConditionReportSerializer, GarkTableauSerializer
from core.io import write_json
from harness.management.base import HarnessCommand
from stepper.methods import METHOD_CATALOG, build_method


class Command(HarnessCommand):
    help = 'Assemble the GARK tableau of a method and report its order conditions'

    def add_arguments(self, parser):
        parser.add_argument('--method', help=f"Method ({', '.join(METHOD_CATALOG)})")
        parser.add_argument('--m', type=int, help='Multirate ratio used to pick subcycles (default 100)')
        parser.add_argument('--subcycles', type=int, nargs='+', help='Explicit subcycles per interval')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        config = self.load_config(options)
        method = self.require(self.resolve(options, config, 'method'), '--method')
        m = self.resolve(options, config, 'm', 100)
        spec = build_method(method, m=m, subcycles=self.resolve(options, config, 'subcycles'))
        tableau = spec.tableau

        self.stdout.write(
            f"🧩 {spec.label}: s_f={tableau.s_f}, s_s={tableau.s_s}, subcycles {list(spec.subcycles)}"
        )
        report = check_conditions(tableau, tol=settings.MULTIRATE_CONDITION_TOL)
        self.stdout.write(self.style.SUCCESS(f"✅ Satisfied order: {report.satisfied_order}"))
        failing = report.failing()
        if failing:
            self.stdout.write(self.style.WARNING(f"⚠️ Failing conditions: {', '.join(failing)}"))

        directory = self.output_dir(options, config)
        path = write_json(
            Path(directory) / f"gark_{spec.label}_m{m}.json",
            {
                "method": spec.label,
                "subcycles": list(spec.subcycles),
                "tableau": GarkTableauSerializer(tableau).data,
                "conditions": ConditionReportSerializer(report).data,
            },
        )
        self.stdout.write(f"💾 Wrote {path}")
