"""ablation: train and score every (model, provenance) cell over several seeds.

The real LSTM of each cell gets the hidden size whose parameter count is
closest to the QLSTM's at that cell's input width, unless lstm_network is
given explicitly. Cells may run in worker processes; results are gathered in
the fixed cell order either way.
"""

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from qlstm_multimic.commands.common import load_config
from qlstm_multimic.commands.report import ABLATION_COLUMNS, ReportFormatter
from qlstm_multimic.config import get_settings
from qlstm_multimic.data.dataset import Dataset, load_dataset
from qlstm_multimic.models.config import AblationConfig, ModelKind, NetworkConfig, Provenance, TrainConfig
from qlstm_multimic.models.results import AblationCell, AblationSummary
from qlstm_multimic.nn.params import lstm_parameter_count, parity_hidden_size, qlstm_parameter_count
from qlstm_multimic.training.loop import prepare_output_dir, train_loop
from qlstm_multimic.utils.seeding import child_seeds

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=2)
def _cached_dataset(path: str) -> Dataset:
    return load_dataset(Path(path))


def _pinned(network: NetworkConfig) -> NetworkConfig:
    # Marks hidden as set so TrainConfig keeps it instead of applying the per-model default.
    return network.model_copy(update={"hidden": network.hidden})


def cell_network(cfg: AblationConfig, kind: ModelKind, provenance: Provenance, num_features: int) -> NetworkConfig:
    if kind is ModelKind.QLSTM:
        return _pinned(cfg.qlstm_network)
    if cfg.lstm_network is not None:
        return _pinned(cfg.lstm_network)
    dataset_width = num_features if provenance is not Provenance.FOUR_MIC else 4 * num_features
    target = qlstm_parameter_count(cfg.qlstm_network, num_features)
    hidden = parity_hidden_size(target, dataset_width, cfg.qlstm_network)
    return cfg.qlstm_network.model_copy(update={"hidden": hidden})


def cell_parameter_count(kind: ModelKind, network: NetworkConfig, input_dim: int) -> int:
    if kind is ModelKind.QLSTM:
        return qlstm_parameter_count(network, input_dim // 4)
    return lstm_parameter_count(network, input_dim)


def run_cell_job(train_cfg: TrainConfig) -> float:
    """Train one seed of one cell and return its test frame accuracy."""
    dataset = _cached_dataset(str(train_cfg.dataset))
    kind, provenance = train_cfg.model, train_cfg.provenance
    metrics = train_loop(
        train_cfg,
        train=dataset.examples("train", provenance, kind),
        valid=dataset.examples("valid", provenance, kind),
        test=dataset.examples("test", provenance, kind),
        input_dim=dataset.input_dim(provenance, kind),
        check_finite=get_settings().debug_checks,
    )
    assert metrics.test is not None
    return metrics.test.frame_accuracy


def run_ablation(cfg: AblationConfig) -> AblationSummary:
    dataset = _cached_dataset(str(cfg.dataset))
    out = prepare_output_dir(cfg.output_dir)
    seeds = child_seeds(cfg.base_seed, cfg.runs)

    cells: list[tuple[ModelKind, Provenance, NetworkConfig, int]] = []
    jobs: list[TrainConfig] = []
    for kind in cfg.models:
        for provenance in cfg.provenances:
            network = cell_network(cfg, kind, provenance, dataset.num_features)
            cells.append((kind, provenance, network, dataset.input_dim(provenance, kind)))
            for run, seed in enumerate(seeds):
                jobs.append(
                    TrainConfig(
                        model=kind,
                        provenance=provenance,
                        network=network,
                        epochs=cfg.epochs,
                        initial_lr=cfg.initial_lr,
                        batch_size=cfg.batch_size,
                        clip_norm=cfg.clip_norm,
                        seed=seed,
                        dataset=cfg.dataset,
                        output_dir=out / f"{kind.value}-{provenance.value}-run{run}",
                    )
                )

    logger.info("ablation: %d cells x %d runs, %d worker(s)", len(cells), cfg.runs, cfg.workers)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            accuracies = list(pool.map(run_cell_job, jobs))
    else:
        accuracies = [run_cell_job(job) for job in jobs]

    summary = AblationSummary(runs=cfg.runs)
    for index, (kind, provenance, network, input_dim) in enumerate(cells):
        scores = accuracies[index * cfg.runs : (index + 1) * cfg.runs]
        summary.cells.append(
            AblationCell(
                model=kind,
                provenance=provenance,
                seeds=seeds,
                accuracies=scores,
                mean=float(np.mean(scores)),
                std=float(np.std(scores)),
                parameter_count=cell_parameter_count(kind, network, input_dim),
            )
        )
    summary.multichannel_gain = multichannel_gain(summary)
    return summary


def multichannel_gain(summary: AblationSummary) -> dict[str, float]:
    """Per model: mean accuracy on four_mic minus mean accuracy on copied_mic."""
    means = {(c.model, c.provenance): c.mean for c in summary.cells}
    gains = {}
    for kind in ModelKind:
        four, copied = means.get((kind, Provenance.FOUR_MIC)), means.get((kind, Provenance.COPIED_MIC))
        if four is not None and copied is not None:
            gains[kind.value] = four - copied
    return gains


def write_summary(summary: AblationSummary, out_dir: Path) -> dict[str, str]:
    formatter = ReportFormatter()
    paths = {
        "json": out_dir / "summary.json",
        "tsv": out_dir / "summary.tsv",
        "markdown": out_dir / "summary.md",
    }
    paths["json"].write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    paths["tsv"].write_text(
        formatter.format_tsv(ABLATION_COLUMNS, formatter.ablation_rows(summary)), encoding="utf-8"
    )
    paths["markdown"].write_text(formatter.format_ablation(summary), encoding="utf-8")
    return {kind: str(path) for kind, path in paths.items()}


def cmd_ablation(
    config_path: Path, seed: Optional[int] = None, out: Optional[Path] = None
) -> AblationSummary:
    cfg = load_config(config_path, AblationConfig, {"base_seed": seed, "output_dir": out})
    summary = run_ablation(cfg)
    written = write_summary(summary, cfg.output_dir)
    logger.info("ablation summary written to %s", written["tsv"])
    return summary
