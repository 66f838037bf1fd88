"""
Convergence study: RMS error against a cached reference for a list of
macro step sizes, with the fitted order.
"""

import math

from harness.management.base import HarnessCommand, parse_assignments
from harness.services import CONVERGENCE_METHODS, ConvergenceStudyService
from problems.benchmarks import PROBLEM_REGISTRY


class Command(HarnessCommand):
    help = 'Run a convergence study and write CSV + JSON reports'

    def add_arguments(self, parser):
        parser.add_argument('--method', help=f"Method ({', '.join(CONVERGENCE_METHODS)}, ...)")
        parser.add_argument('--problem', help=f"Problem ({', '.join(PROBLEM_REGISTRY)})")
        parser.add_argument('--h', type=float, nargs='+', help='Decreasing macro step sizes')
        parser.add_argument('--m', type=int, help='Multirate ratio used to pick subcycles (default 100)')
        parser.add_argument('--subcycles', type=int, nargs='+', help='Explicit subcycles per interval')
        parser.add_argument('--set', dest='assignments', action='append', metavar='KEY=VALUE',
                            help='Override a problem parameter (repeatable)')
        parser.add_argument('--ref-tol', type=float, help='Target RMS of the reference solution')
        parser.add_argument('--refcache', help='Reference cache directory')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--no-workers', action='store_true', help='Evaluate points in-process')

    def handle(self, *args, **options):
        config = self.load_config(options)
        method = self.require(self.resolve(options, config, 'method'), '--method')
        problem = self.require(self.resolve(options, config, 'problem'), '--problem')
        overrides = dict(config.get('overrides', {}), **parse_assignments(options['assignments']))

        service = ConvergenceStudyService(
            refcache=self.resolve(options, config, 'refcache'),
            target_rms=self.resolve(options, config, 'ref_tol'),
            use_workers=False if options['no_workers'] else None,
        )
        report = service.converge(
            method,
            problem,
            h_values=self.resolve(options, config, 'h'),
            m=self.resolve(options, config, 'm', 100),
            overrides=overrides,
            subcycles=self.resolve(options, config, 'subcycles'),
        )

        for h, error, calls in zip(report.h_values, report.rms_errors, report.total_calls):
            marker = ' (unstable)' if math.isinf(error) else ''
            self.stdout.write(f"   h={h:.4e}  rms={error:.3e}  calls={calls}{marker}")
        order = 'undefined' if math.isnan(report.fitted_order) else f"{report.fitted_order:.3f}"
        self.stdout.write(self.style.SUCCESS(f"✅ {method} on {problem}: fitted order {order}"))

        csv_path, json_path = report.write(self.output_dir(options, config))
        self.stdout.write(f"💾 Wrote {csv_path} and {json_path}")
