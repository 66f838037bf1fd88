"""
Linear stability scans on the (xi, eta) square at fixed kappa, or the
largest-area search along a fourth-order family.
"""

from pathlib import Path

from core.io import write_json
from harness.management.base import HarnessCommand
from stability.plotting import export_scan
from stability.scan import FAMILY_KINDS, maximize_area, scan
from stability.serializers import StabilityScanSummarySerializer
from stepper.methods import METHOD_CATALOG, build_method


class Command(HarnessCommand):
    help = 'Scan the stability region of a method and write CSV + SVG'

    def add_arguments(self, parser):
        parser.add_argument('--method', help=f"Method ({', '.join(METHOD_CATALOG)})")
        parser.add_argument('--kappa', type=float, help='Time-scale ratio (default 10)')
        parser.add_argument('--m', type=int, help='Multirate ratio of the method (default: kappa rounded)')
        parser.add_argument('--family', choices=sorted(FAMILY_KINDS),
                            help='Search the family for the largest stable area instead')
        parser.add_argument('--samples', type=int, default=100, help='Family samples for --family')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        config = self.load_config(options)
        kappa = self.resolve(options, config, 'kappa', 10.0)
        m = self.resolve(options, config, 'm') or max(1, int(round(kappa)))
        directory = Path(self.output_dir(options, config))

        if options['family']:
            (c2, c3), result = maximize_area(options['family'], kappa, n_samples=options['samples'], m=m)
            self.stdout.write(self.style.SUCCESS(f"🏆 Best {options['family']} member: c2={c2:.6f}, c3={c3:.6f}"))
            stem = f"stability_{options['family']}-family_k{kappa:g}"
        else:
            method = self.require(self.resolve(options, config, 'method'), '--method')
            result = scan(build_method(method, m=m), kappa)
            stem = f"stability_{method}_k{kappa:g}"

        csv_path, svg_path = export_scan(result, directory, stem)
        write_json(directory / f"{stem}.json", StabilityScanSummarySerializer(result).data)
        self.stdout.write(self.style.SUCCESS(f"✅ Stable area fraction: {result.area_fraction:.4f}"))
        self.stdout.write(f"💾 Wrote {csv_path} and {svg_path}")
