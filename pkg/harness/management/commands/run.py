"""
Single fixed-step run of a method on a benchmark problem.
"""

from pathlib import Path

from django.core.management.base import CommandError

from butcher.serializers import ButcherTableSerializer
from core.exceptions import EXIT_USAGE
from core.io import read_json
from harness.management.base import HarnessCommand, parse_assignments
from problems.benchmarks import PROBLEM_REGISTRY, build_problem
from stepper.methods import METHOD_CATALOG, MethodKind, build_method, method_from_tables
from stepper.stepping import integrate


class Command(HarnessCommand):
    help = 'Integrate a benchmark problem with one method and step size'

    def add_arguments(self, parser):
        parser.add_argument('--method', help=f"Method ({', '.join(METHOD_CATALOG)})")
        parser.add_argument('--problem', help=f"Problem ({', '.join(PROBLEM_REGISTRY)})")
        parser.add_argument('--h', type=float, help='Macro step size')
        parser.add_argument('--m', type=int, help='Multirate ratio used to pick subcycles (default 100)')
        parser.add_argument('--subcycles', type=int, nargs='+', help='Explicit subcycles per interval')
        parser.add_argument('--set', dest='assignments', action='append', metavar='KEY=VALUE',
                            help='Override a problem parameter (repeatable)')
        parser.add_argument('--tableau-file', help='Butcher table JSON used as outer and inner table')
        parser.add_argument('--kind', choices=[kind.value for kind in MethodKind if kind != MethodKind.OPTIMIZED],
                            default=MethodKind.RMIS.value, help='Construction for --tableau-file')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        config = self.load_config(options)
        problem_name = self.require(self.resolve(options, config, 'problem'), '--problem')
        h = options['h'] if options['h'] is not None else (config.get('h') or [None])[0]
        h = self.require(h, '--h')
        m = self.resolve(options, config, 'm', 100)
        subcycles = self.resolve(options, config, 'subcycles')
        overrides = dict(config.get('overrides', {}), **parse_assignments(options['assignments']))

        problem = build_problem(problem_name, overrides)
        spec = self._method(options, config, m, subcycles)
        self.stdout.write(f"🚀 {spec.label} on {problem.name}, h={h}, subcycles {list(spec.subcycles)}")
        trajectory = integrate(problem, spec, h)

        directory = self.output_dir(options, config)
        csv_path, json_path = trajectory.write(Path(directory) / f"run_{spec.label}_{problem.name}_h{h:g}.csv")
        self.stdout.write(self.style.SUCCESS(
            f"✅ {trajectory.steps} steps, {trajectory.fast_calls} fast + {trajectory.slow_calls} slow calls"
        ))
        self.stdout.write(f"💾 Wrote {csv_path} and {json_path}")

    def _method(self, options, config, m, subcycles):
        if options['tableau_file']:
            serializer = ButcherTableSerializer(data=read_json(options['tableau_file']))
            if not serializer.is_valid():
                raise CommandError(f"Invalid table file: {serializer.errors}", returncode=EXIT_USAGE)
            table = serializer.save()
            kind = MethodKind(options['kind'])
            return method_from_tables(kind, table, table, m=m, subcycles=subcycles,
                                      name=f"{kind.value}-{table.name or 'custom'}")
        method = self.require(self.resolve(options, config, 'method'), '--method')
        return build_method(method, m=m, subcycles=subcycles)
