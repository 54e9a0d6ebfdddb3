"""CLI command for discovering a causal graph from a data CSV."""
import argparse
import logging
from pathlib import Path

from ..config import load_run_config
from ..exceptions import DiffanError, OrderingAbortedError, TrainingDivergedError
from ..models.dag import Dag
from ..models.dataset import Dataset
from ..services.neural import load_checkpoint, save_checkpoint
from ..services.ordering import VARIANTS
from ..services.pipeline import discover
from ..utils.manifest import write_json, write_manifest
from ..utils.paths import command_output_dir
from .display_utils import console, display_ordering, metrics_table, print_error, print_written, progress_bar

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pt"


def add_subparser(subparsers):
    """Add the discover command parser to the main parser."""
    parser = subparsers.add_parser(
        "discover",
        help="Order the variables of a dataset and prune the resulting graph",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train, order and prune with the default configuration
  diffan discover runs/er10/data.csv --out-dir runs/er10/fit

  # Score against the true graph
  diffan discover data.csv --truth truth.csv -o out

  # Rerun ordering only, with the network trained by an earlier run
  diffan discover data.csv -o out --variant residue --skip-train-if-checkpoint
        """
    )
    parser.add_argument("data", help="CSV with a header of variable names and one row per sample")
    parser.add_argument("--config", "-c", help="YAML/JSON run document")
    parser.add_argument("--out-dir", "-o", help="Output directory (default: runs/discover-<time>)")
    parser.add_argument("--truth", help="True adjacency CSV; writes metrics.json")
    parser.add_argument("--variant", choices=VARIANTS, help="Override ordering.variant")
    parser.add_argument("--seed", type=int, help="Override the training and ordering seeds")
    parser.add_argument("--checkpoint", help=f"Checkpoint path (default: <out-dir>/{CHECKPOINT_NAME})")
    parser.add_argument("--skip-train-if-checkpoint", action="store_true",
                        help="Reuse the checkpoint when it exists instead of training")
    return parser


def _overrides(args):
    overrides = {}
    if args.variant:
        overrides['ordering'] = {'variant': args.variant}
    if args.seed is not None:
        overrides.setdefault('ordering', {})['seed'] = args.seed
        overrides['train'] = {'seed': args.seed}
    return overrides


def handle_command(args):
    """Handle the discover command."""
    try:
        run = load_run_config(args.config, _overrides(args))
        data = Dataset.from_csv(args.data)
        truth = Dag.from_csv(args.truth) if args.truth else None
        out_dir = command_output_dir(args.out_dir, "discover")
        checkpoint = Path(args.checkpoint) if args.checkpoint else out_dir / CHECKPOINT_NAME

        net = standardizer = None
        losses = None
        if args.skip_train_if_checkpoint and checkpoint.exists():
            net, standardizer, saved = load_checkpoint(checkpoint)
            losses = saved.get('losses')
            console.print(f"[yellow]Using trained network from {checkpoint}[/yellow]")

        with progress_bar(("Training", run.train.epochs_max), ("Ordering", data.d)) as (train_step, order_step):
            result = discover(
                data, run, truth, net=net, standardizer=standardizer,
                on_epoch=lambda r: train_step(f"val {r.val_loss:.4f}"),
                on_iteration=lambda diag: order_step(f"leaf {data.labels[diag.leaf]}"),
            )

        outputs = []
        if result.training is not None:
            losses = result.training.final_losses
            outputs.append(save_checkpoint(checkpoint, result.net, result.standardizer, extra={'losses': losses}))
        ordering_labels = result.ordering.ordering.to_labels(data.labels)
        outputs.append(write_json(out_dir / "ordering.json", ordering_labels))
        result.graph.to_csv(out_dir / "graph.csv")
        result.ordering.diagnostics_frame().to_csv(out_dir / "diagnostics.csv", index=False)
        result.ordering.variance_frame().to_csv(out_dir / "variances.csv", index=False)
        outputs += [out_dir / "graph.csv", out_dir / "diagnostics.csv", out_dir / "variances.csv"]
        if result.metrics is not None:
            outputs.append(write_json(out_dir / "metrics.json", result.metrics))
        outputs.append(write_manifest(
            out_dir, "discover", run.to_dict(),
            seeds={'train': run.train.seed, 'ordering': run.ordering.seed},
            outputs=outputs, arguments=vars(args), extra={'training': losses}))

        display_ordering(ordering_labels, "Topological ordering (root first)")
        console.print(f"[green]Kept {result.graph.n_edges} edges[/green] "
                      f"in {result.seconds['total']:.1f}s")
        if result.metrics is not None:
            console.print(metrics_table(result.metrics))
        print_written(outputs)
        return 0
    except TrainingDivergedError as e:
        print_error(e)
        console.print(f"[yellow]Training diverged at epoch {e.epoch}[/yellow]")
        return e.exit_code
    except OrderingAbortedError as e:
        print_error(e)
        console.print(f"[yellow]Leaves found before the failure: {e.partial_order}[/yellow]")
        return e.exit_code
    except DiffanError as e:
        print_error(e)
        return e.exit_code
