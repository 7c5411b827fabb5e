"""Format ablation results as markdown or tab-separated tables."""

from typing import Any

from qlstm_multimic.models.results import AblationSummary

ABLATION_COLUMNS = ["model", "provenance", "runs", "mean_acc", "std_acc", "params"]


class ReportFormatter:
    """Render result models as human-readable (markdown) or machine-readable (TSV) tables."""

    def ablation_rows(self, summary: AblationSummary) -> list[list[Any]]:
        return [
            [c.model.value, c.provenance.value, len(c.accuracies), c.mean, c.std, c.parameter_count]
            for c in summary.cells
        ]

    def format_ablation(self, summary: AblationSummary) -> str:
        """Markdown table of mean ± std accuracy per cell plus the multi-channel gains."""
        output = f"### Frame accuracy over {summary.runs} run(s)\n\n"
        output += self.format_table(ABLATION_COLUMNS, self.ablation_rows(summary))
        if summary.multichannel_gain:
            output += "\n**Multi-channel gain (four_mic - copied_mic):**\n\n"
            for model, gain in summary.multichannel_gain.items():
                output += f"- {model}: {self._format_cell(gain)}\n"
        return output

    def format_table(self, columns: list[str], rows: list[list[Any]]) -> str:
        """Format rows as a markdown table.

        Args:
            columns: Column names.
            rows: Data rows.

        Returns:
            Markdown table string.
        """
        if not rows:
            return "_No results_\n"

        output = "| " + " | ".join(str(col) for col in columns) + " |\n"
        output += "| " + " | ".join("---" for _ in columns) + " |\n"
        for row in rows:
            output += "| " + " | ".join(self._format_cell(cell) for cell in row) + " |\n"
        return output

    def format_tsv(self, columns: list[str], rows: list[list[Any]]) -> str:
        """Tab-separated text with a header line; floats keep full precision."""
        lines = ["\t".join(columns)]
        lines += ["\t".join(repr(c) if isinstance(c, float) else str(c) for c in row) for row in rows]
        return "\n".join(lines) + "\n"

    def _format_cell(self, value: Any) -> str:
        if value is None:
            return "_null_"
        if isinstance(value, float):
            return f"{value:.4f}" if abs(value) < 1e4 else f"{value:.3e}"
        if isinstance(value, str):
            return value.replace("|", "\\|")
        return str(value)
