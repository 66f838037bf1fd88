"""
Fast weights of a multirate method fitted to the fourth-order coupling
conditions.

The outer and slow blocks stay fixed; the fast weight vector is the
minimum-norm solution of the order conditions that involve it. The result
is a runnable method with the same cost as its MIS counterpart.
"""

import numpy as np
from django.conf import settings

from butcher.tables import SHIPPED_TABLES, get_table
from core.io import write_json
from gark.conditions import check_conditions
from gark.optimize import optimize_fast_weights
from gark.serializers import ConditionReportSerializer
from harness.management.base import HarnessCommand
from stepper.methods import MethodKind, MethodSpec, default_subcycles


class Command(HarnessCommand):
    help = 'Compute minimum-norm fast weights satisfying the fourth-order conditions'

    def add_arguments(self, parser):
        parser.add_argument('--outer', help=f"Outer table ({', '.join(SHIPPED_TABLES)}; default 38)")
        parser.add_argument('--inner', help='Inner table (default: the outer table)')
        parser.add_argument('--m', type=int, help='Multirate ratio used to pick subcycles (default 100)')
        parser.add_argument('--subcycles', type=int, nargs='+', help='Explicit subcycles per interval')
        parser.add_argument('--include-collapsed', action='store_true', default=None,
                            help='Also free the fast stages of zero-width intervals')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        config = self.load_config(options)
        outer_name = self.resolve(options, config, 'outer', '38')
        outer = get_table(outer_name)
        inner = get_table(self.resolve(options, config, 'inner', outer_name))
        include_collapsed = bool(self.resolve(options, config, 'include_collapsed', False))
        m = self.resolve(options, config, 'm', 100)
        subcycles = self.resolve(options, config, 'subcycles') or default_subcycles(outer, m)

        layout = MethodSpec(MethodKind.MIS, outer, inner, subcycles)
        weights = optimize_fast_weights(outer, layout.inner_tables(), include_collapsed=include_collapsed)
        spec = MethodSpec(MethodKind.OPTIMIZED, outer, inner, subcycles, fast_weights=weights,
                          name=f"opt-{outer.name}-minnorm")
        report = check_conditions(spec.tableau, tol=settings.MULTIRATE_CONDITION_TOL)

        self.stdout.write(f"🔧 {weights.size} free fast weights, subcycles {list(subcycles)}")
        self.stdout.write(f"   ||b_f||_2 = {np.linalg.norm(weights):.6e}")
        self.stdout.write(self.style.SUCCESS(f"✅ Satisfied order: {report.satisfied_order}"))

        directory = self.output_dir(options, config)
        path = write_json(
            directory / f"{spec.label}_m{m}.json",
            {
                "method": spec.label,
                "outer": outer.name,
                "inner": inner.name,
                "subcycles": list(subcycles),
                "include_collapsed": include_collapsed,
                "fast_weights": weights,
                "conditions": ConditionReportSerializer(report).data,
            },
        )
        self.stdout.write(f"💾 Wrote {path}")
