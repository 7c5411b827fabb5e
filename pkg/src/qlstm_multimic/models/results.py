"""Result models emitted by training, evaluation and the harness commands."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qlstm_multimic.models.config import ModelKind, Provenance


class EpochRecord(BaseModel):
    """One line of metrics.jsonl."""

    epoch: int = Field(..., ge=1, description="1-based epoch index")
    lr: float = Field(..., description="Learning rate used during this epoch")
    train_loss: float = Field(..., description="Frame-weighted mean training loss")
    val_loss: float = Field(..., description="Frame-weighted mean validation loss")
    val_frame_accuracy: float = Field(..., description="Validation frame accuracy in [0, 1]")
    wall_time_s: float = Field(0.0, description="Epoch wall time (0.0 unless recorded)")


class EvalReport(BaseModel):
    """Frame accuracy and confusion counts of one model on one split."""

    split: str = Field(..., description="Evaluated split name")
    model: ModelKind = Field(..., description="Network family")
    provenance: Provenance = Field(..., description="Input provenance")
    n_frames: int = Field(..., ge=0, description="Number of labeled frames")
    loss: float = Field(..., description="Frame-weighted mean cross-entropy")
    frame_accuracy: float = Field(..., description="Fraction of frames classified correctly")
    confusion: list[list[int]] = Field(
        ..., description="confusion[true][predicted] frame counts"
    )
    permuted_labels: bool = Field(False, description="Labels were randomly permuted (control)")

    @model_validator(mode="after")
    def _confusion_total(self) -> "EvalReport":
        total = sum(sum(row) for row in self.confusion)
        if total != self.n_frames:
            raise ValueError(f"confusion counts sum to {total}, expected {self.n_frames}")
        return self


class RunMetrics(BaseModel):
    """Full history of a training run."""

    epochs: list[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = Field(None, description="Epoch with the lowest validation loss")
    best_val_loss: Optional[float] = None
    best_val_frame_accuracy: Optional[float] = None
    test: Optional[EvalReport] = Field(None, description="Best checkpoint on the test split")


class GradCheckReport(BaseModel):
    """Outcome of a finite-difference gradient verification."""

    model_config = ConfigDict(populate_by_name=True)

    max_rel_error: float = Field(..., description="Largest relative error over all scalars")
    worst_param: str = Field(..., description="Parameter array holding the largest error")
    worst_index: int = Field(..., description="Flat index of the worst scalar in that array")
    passed: bool = Field(..., alias="pass", description="max_rel_error <= tolerance")
    tolerance: float
    step: float
    n_checked: int = Field(..., description="Number of scalars compared")


class BenchRow(BaseModel):
    """Throughput of the two Hamilton product paths at one size."""

    size: int = Field(..., description="Quaternion matrix side n (n x n weights, n inputs)")
    n_products: int = Field(..., description="Hamilton products per pass (n²)")
    scalar_products_per_s: float
    batched_products_per_s: float
    speedup: float
    max_abs_diff: float = Field(..., description="Largest disagreement between the two paths")
    ops_per_product: int = Field(..., description="Basic operations of one scalar product")


class BenchReport(BaseModel):
    rows: list[BenchRow] = Field(default_factory=list)


class AblationCell(BaseModel):
    """Test accuracies of one (model, provenance) pair across seeds."""

    model: ModelKind
    provenance: Provenance
    seeds: list[int]
    accuracies: list[float]
    mean: float
    std: float
    parameter_count: int


class AblationSummary(BaseModel):
    """Experiment matrix summary."""

    runs: int
    cells: list[AblationCell] = Field(default_factory=list)
    multichannel_gain: dict[str, float] = Field(
        default_factory=dict,
        description="Per model: mean accuracy of four_mic minus copied_mic",
    )
