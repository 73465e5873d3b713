import logging
import os
from datetime import datetime, timezone

import click
from flask import Blueprint

from app.errors import ConfigError, DataError, ParseError
from app.model.trainer import LOG_HEADER, EpochRecord
from app.utils import exits_on_error, require_file

# Try to import reportlab and PIL for PDF generation with a chart
try:
    from reportlab.lib import colors
    from reportlab.lib.pagesizes import A4
    from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
    from reportlab.lib.units import inch
    from reportlab.platypus import Image as RLImage
    from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
    from PIL import Image, ImageDraw
    PDF_AVAILABLE = True
except ImportError:
    PDF_AVAILABLE = False

logger = logging.getLogger(__name__)

bp = Blueprint("report", __name__, cli_group=None)

CHART_SIZE = (800, 420)
MARGIN = 50
NLL_COLOR = (200, 60, 40)
F_COLOR = (30, 70, 160)


def read_training_log(path: str) -> list[EpochRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        if tuple(header) != LOG_HEADER:
            raise ParseError(path, 1, f"expected header {' '.join(LOG_HEADER)}")
        for line_no, line in enumerate(f, 2):
            fields = line.rstrip("\n").split("\t")
            if fields == [""]:
                continue
            try:
                epoch, mean_nll, dev_f, step = fields
                records.append(EpochRecord(int(epoch), float(mean_nll), float(dev_f), float(step)))
            except ValueError:
                raise ParseError(path, line_no, f"malformed row {line.rstrip()!r}") from None
    return records


def summarize_training(records: list[EpochRecord]) -> dict:
    """Headline numbers of a training run."""
    if not records:
        return {"epochs": 0, "best_epoch": None, "best_f": 0.0, "first_nll": None, "final_nll": None}
    best = max(records, key=lambda r: (r.dev_f, -r.epoch))
    return {
        "epochs": len(records),
        "best_epoch": best.epoch,
        "best_f": best.dev_f,
        "first_nll": records[0].mean_nll,
        "final_nll": records[-1].mean_nll,
        "final_lr": records[-1].lr,
    }


def draw_learning_curve(records: list[EpochRecord], path: str) -> str:
    """Mean NLL (scaled to its own range) and dev F per epoch, as a PNG."""
    width, height = CHART_SIZE
    image = Image.new("RGB", CHART_SIZE, "white")
    draw = ImageDraw.Draw(image)
    left, top, right, bottom = MARGIN, MARGIN, width - MARGIN, height - MARGIN
    draw.rectangle((left, top, right, bottom), outline="black")

    n = len(records)
    lo = min(r.mean_nll for r in records)
    hi = max(r.mean_nll for r in records)
    span = (hi - lo) or 1.0

    def x(i: int) -> float:
        return left + (right - left) * (i / (n - 1) if n > 1 else 0.5)

    def y(fraction: float) -> float:
        return bottom - (bottom - top) * fraction

    nll_points = [(x(i), y((r.mean_nll - lo) / span)) for i, r in enumerate(records)]
    f_points = [(x(i), y(r.dev_f)) for i, r in enumerate(records)]
    for points, color in ((nll_points, NLL_COLOR), (f_points, F_COLOR)):
        if len(points) > 1:
            draw.line(points, fill=color, width=3)
        for px, py in points:
            draw.ellipse((px - 3, py - 3, px + 3, py + 3), fill=color)

    draw.text((left, bottom + 10), f"epoch {records[0].epoch}", fill="black")
    draw.text((right - 60, bottom + 10), f"epoch {records[-1].epoch}", fill="black")
    draw.text((left, 15), f"mean NLL {lo:.3f}..{hi:.3f}", fill=NLL_COLOR)
    draw.text((left + 260, 15), "dev F 0..1", fill=F_COLOR)
    image.save(path, "PNG")
    return path


def generate_training_pdf(records: list[EpochRecord], pdf_path: str, source: str):
    """Render a training log into a PDF; returns (pdf_path, error)."""
    if not PDF_AVAILABLE:
        return None, "PDF generation not available - missing dependencies"
    if not records:
        return None, f"{source} has no epochs to report"

    chart_path = os.path.splitext(pdf_path)[0] + "_curve.png"
    try:
        draw_learning_curve(records, chart_path)
        doc = SimpleDocTemplate(pdf_path, pagesize=A4)
        styles = getSampleStyleSheet()
        title_style = ParagraphStyle(
            "ReportTitle",
            parent=styles["Heading1"],
            fontSize=22,
            spaceAfter=24,
            alignment=1,
            textColor=colors.darkblue,
        )
        heading_style = ParagraphStyle(
            "ReportHeading",
            parent=styles["Heading2"],
            fontSize=15,
            spaceAfter=10,
            spaceBefore=18,
            textColor=colors.darkblue,
        )
        summary = summarize_training(records)

        story = [
            Paragraph("Training Report", title_style),
            Paragraph(f"Log: {source}", styles["Normal"]),
            Spacer(1, 16),
            Paragraph("Summary", heading_style),
        ]
        summary_table = Table([
            ["Metric", "Value"],
            ["Epochs run", str(summary["epochs"])],
            ["Best epoch", str(summary["best_epoch"])],
            ["Best dev F", f"{summary['best_f']:.4f}"],
            ["Mean NLL, first epoch", f"{summary['first_nll']:.4f}"],
            ["Mean NLL, last epoch", f"{summary['final_nll']:.4f}"],
            ["Final learning rate", f"{summary['final_lr']:.5f}"],
        ])
        summary_table.setStyle(_table_style(colors.grey))
        story += [summary_table, Spacer(1, 16)]

        story.append(Paragraph("Learning Curve", heading_style))
        story.append(RLImage(chart_path, width=6 * inch, height=6 * inch * CHART_SIZE[1] / CHART_SIZE[0]))
        story.append(Spacer(1, 16))

        story.append(Paragraph("Epochs", heading_style))
        rows = [list(LOG_HEADER)] + [
            [str(r.epoch), f"{r.mean_nll:.4f}", f"{r.dev_f:.4f}", f"{r.lr:.5f}"] for r in records
        ]
        epoch_table = Table(rows, repeatRows=1)
        epoch_table.setStyle(_table_style(colors.lightblue))
        story.append(epoch_table)

        generated = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
        story += [Spacer(1, 16), Paragraph(f"Report generated {generated} UTC", styles["Normal"])]
        doc.build(story)
        return pdf_path, None
    except Exception as e:
        return None, f"PDF generation failed: {e}"
    finally:
        if os.path.exists(chart_path):
            os.remove(chart_path)


def _table_style(header_color):
    return TableStyle([
        ("BACKGROUND", (0, 0), (-1, 0), header_color),
        ("TEXTCOLOR", (0, 0), (-1, 0), colors.whitesmoke),
        ("ALIGN", (0, 0), (-1, -1), "LEFT"),
        ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
        ("FONTSIZE", (0, 0), (-1, 0), 11),
        ("BOTTOMPADDING", (0, 0), (-1, 0), 10),
        ("BACKGROUND", (0, 1), (-1, -1), colors.beige),
        ("GRID", (0, 0), (-1, -1), 1, colors.black),
    ])


@bp.cli.command("report")
@click.option("--log", "log_path", required=True, help="train.log written by train.")
@click.option("--out", "out_path", required=True, help="PDF to write.")
@exits_on_error
def cmd_report(log_path, out_path):
    """PDF with the per-epoch table and learning curve of a training run."""
    if not PDF_AVAILABLE:
        raise ConfigError("the report needs reportlab and Pillow")
    records = read_training_log(require_file(log_path, what="training log"))
    pdf_path, error = generate_training_pdf(records, out_path, log_path)
    if error:
        raise DataError(error)
    logger.info("wrote training report for %d epochs", len(records))
    click.echo(f"report\t{pdf_path}")
