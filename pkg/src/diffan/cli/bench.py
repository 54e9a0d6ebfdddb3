"""CLI command for benchmark sweeps."""
import argparse

from ..config import load_run_config
from ..exceptions import DiffanError
from ..services.bench import bench_cells, run_bench
from ..utils.manifest import write_manifest
from ..utils.paths import command_output_dir
from .display_utils import display_summary, print_error, print_written, progress_bar


def add_subparser(subparsers):
    """Add the bench command parser to the main parser."""
    parser = subparsers.add_parser(
        "bench",
        help="Sweep variants, d, n, k and seeds; write a long-form CSV",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Sweep the grid in the bench section of a config
  diffan bench --config ksweep.yaml -o runs/ksweep
        """
    )
    parser.add_argument("--config", "-c", help="YAML/JSON run document with a bench section")
    parser.add_argument("--out-dir", "-o", help="Output directory (default: runs/bench-<time>)")
    return parser


def handle_command(args):
    """Handle the bench command."""
    try:
        run = load_run_config(args.config)
        out_dir = command_output_dir(args.out_dir, "bench")

        with progress_bar(("Bench", len(bench_cells(run)))) as (step,):
            frame = run_bench(run, on_row=lambda row: step(f"{row['variant']} d_top {row['d_top']}"))

        path = out_dir / "bench.csv"
        frame.to_csv(path, index=False)
        outputs = [path, write_manifest(out_dir, "bench", run.to_dict(),
                                        seeds={'cells': run.bench.seeds, 'ordering': run.ordering.seed},
                                        outputs=[path], arguments=vars(args))]
        display_summary(frame, "Bench summary")
        print_written(outputs)
        return 0
    except DiffanError as e:
        print_error(e)
        return e.exit_code
