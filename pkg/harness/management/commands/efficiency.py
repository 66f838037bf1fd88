"""
Work-precision data: total right-hand side calls against RMS error for
several methods on one problem.
"""

from pathlib import Path

from harness.management.base import HarnessCommand, parse_assignments
from harness.services import CONVERGENCE_METHODS, ConvergenceStudyService, write_efficiency_table
from problems.benchmarks import PROBLEM_REGISTRY


class Command(HarnessCommand):
    help = 'Write an error-versus-cost table for several methods'

    def add_arguments(self, parser):
        parser.add_argument('--methods', nargs='+', help=f"Methods (default: {' '.join(CONVERGENCE_METHODS)})")
        parser.add_argument('--problem', help=f"Problem ({', '.join(PROBLEM_REGISTRY)})")
        parser.add_argument('--h', type=float, nargs='+', help='Decreasing macro step sizes')
        parser.add_argument('--m', type=int, help='Multirate ratio used to pick subcycles (default 100)')
        parser.add_argument('--set', dest='assignments', action='append', metavar='KEY=VALUE',
                            help='Override a problem parameter (repeatable)')
        parser.add_argument('--ref-tol', type=float, help='Target RMS of the reference solution')
        parser.add_argument('--refcache', help='Reference cache directory')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--no-workers', action='store_true', help='Evaluate points in-process')

    def handle(self, *args, **options):
        config = self.load_config(options)
        methods = self.resolve(options, config, 'methods', list(CONVERGENCE_METHODS))
        problem = self.require(self.resolve(options, config, 'problem'), '--problem')
        overrides = dict(config.get('overrides', {}), **parse_assignments(options['assignments']))

        service = ConvergenceStudyService(
            refcache=self.resolve(options, config, 'refcache'),
            target_rms=self.resolve(options, config, 'ref_tol'),
            use_workers=False if options['no_workers'] else None,
        )
        reports = service.efficiency(
            methods,
            problem,
            h_values=self.resolve(options, config, 'h'),
            m=self.resolve(options, config, 'm', 100),
            overrides=overrides,
        )

        directory = Path(self.output_dir(options, config))
        for report in reports:
            per_step = report.total_calls[0] // max(report.steps[0], 1)
            self.stdout.write(f"📊 {report.method}: {per_step} calls/step, fitted order {report.fitted_order:.3f}")
            report.write(directory, stem=f"efficiency_{report.method}_{problem}")
        path = write_efficiency_table(reports, directory / f"efficiency_{problem}.csv")
        self.stdout.write(self.style.SUCCESS(f"✅ Wrote {path}"))
