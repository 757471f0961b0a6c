"""Command-line feature dumper producing hub-scorable files.

Each run writes one PTMF feature file per model, a label file, a hub
manifest referencing them, and a per-model extraction report; failures are
recorded per model without aborting the batch. The resulting directory is
directly consumable by the scoring engine, e.g.:

    hubextract vision --model resnet18 --model mobilenet_v3_small \
        --dataset ./images --out ./dump
    hubrank rank --manifest ./dump/manifest.json
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import language, ptmf, vision


def _finish(out_dir: Path, dataset_name: str, labels_file: str, num_classes, entries, report):
    manifest_path = None
    succeeded = [e for e in entries if "feature_file" in e]
    if succeeded:
        manifest_path = out_dir / "manifest.json"
        ptmf.write_manifest(
            manifest_path,
            dataset=dataset_name,
            labels_file=labels_file,
            num_classes=num_classes,
            models=succeeded,
        )
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    for entry in report["models"]:
        status = entry.get("error") or entry.get("warning") or "ok"
        click.echo(f"{entry['id']}: {status}")
    if manifest_path:
        click.echo(f"manifest: {manifest_path}")
    if not succeeded:
        raise click.ClickException("no model produced features")


@click.group()
def main() -> None:
    """Dump features from pre-trained checkpoints into scorable files."""


@main.command(name="vision")
@click.option("--model", "model_names", multiple=True, required=True,
              help="Repeatable; one of: " + ", ".join(sorted(vision.MODEL_REGISTRY)))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory with one subdirectory per class.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--image-size", default=224, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--pretrained/--no-pretrained", default=True,
              help="Fetch checkpoint weights; falls back to random initialization on failure.")
@click.option("--append-constant", is_flag=True,
              help="Append a constant 1.0 feature column (opt-in intercept).")
def vision_command(model_names, dataset_dir, out_dir, image_size, batch_size, device,
                   pretrained, append_constant) -> None:
    """Extract pooled image features, one PTMF file per model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = vision.load_image_folder(dataset_dir)
    ptmf.write_class_labels(out / "labels.csv", dataset.labels)

    entries: list[dict] = []
    report = {"dataset": str(dataset_dir), "kind": "vision", "models": []}
    for name in model_names:
        record: dict = {"id": name}
        try:
            model, warning = vision.build_headless(name, pretrained=pretrained)
            features = vision.extract_image_features(
                model, dataset, image_size=image_size, batch_size=batch_size, device=device
            )
            if append_constant:
                features = np.hstack([features, np.ones((features.shape[0], 1))])
            ptmf.write_matrix(out / f"{name}.ptmf", features)
            record.update({"feature_file": f"{name}.ptmf", "feature_dim": features.shape[1]})
            if warning:
                record["warning"] = warning
        except Exception as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
        report["models"].append(dict(record))
        entries.append(
            {"id": name, "feature_file": record["feature_file"]} if "feature_file" in record else record
        )
    _finish(out, Path(dataset_dir).name, "labels.csv", len(dataset.class_names), entries, report)


@main.command(name="language")
@click.option("--model", "model_names", multiple=True, required=True,
              help="Repeatable; a transformers hub id, or tiny-random[:HIDDEN] for an offline random encoder.")
@click.option("--sentences", "sentences_path", type=click.Path(exists=True, dir_okay=False),
              help="One sentence per line (sentence-level extraction).")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False),
              help="One integer label per sentence.")
@click.option("--conll", "conll_path", type=click.Path(exists=True, dir_okay=False),
              help="Token-per-line 'token tag' file; switches to token-level extraction.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--pooling", type=click.Choice(["mean", "cls"]), default="mean", show_default=True,
              help="Sentence pooling of the final hidden states.")
@click.option("--device", default="cpu", show_default=True)
def language_command(model_names, sentences_path, labels_path, conll_path, out_dir,
                     pooling, device) -> None:
    """Extract sentence-pooled or token-flattened text features."""
    if (sentences_path is None) == (conll_path is None):
        raise click.ClickException("provide exactly one of --sentences or --conll")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    token_level = conll_path is not None
    corpus = language.load_conll(conll_path) if token_level else language.load_sentences(
        sentences_path, labels_path
    )

    labels_written = None
    num_classes = None
    entries: list[dict] = []
    report = {
        "dataset": str(conll_path or sentences_path),
        "kind": "language-token" if token_level else "language-sentence",
        "total_words": corpus.total_words,
        "models": [],
    }
    for name in model_names:
        record: dict = {"id": name}
        try:
            model, tokenizer = _load_language_model(name, corpus)
            if token_level:
                features, token_labels = language.extract_token_features(
                    model, tokenizer, corpus, device=device
                )
                if labels_written is None and token_labels is not None:
                    ptmf.write_class_labels(out / "labels.csv", token_labels)
                    labels_written = "labels.csv"
                    num_classes = int(token_labels.max()) + 1
            else:
                features = language.extract_sentence_features(
                    model, tokenizer, corpus, pooling=pooling, device=device
                )
                if labels_written is None and corpus.sentence_labels is not None:
                    ptmf.write_class_labels(out / "labels.csv", corpus.sentence_labels)
                    labels_written = "labels.csv"
                    num_classes = int(corpus.sentence_labels.max()) + 1
            safe = name.replace("/", "__").replace(":", "_")
            ptmf.write_matrix(out / f"{safe}.ptmf", features)
            record.update({
                "feature_file": f"{safe}.ptmf",
                "feature_dim": features.shape[1],
                "rows": features.shape[0],
            })
        except Exception as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
        report["models"].append(dict(record))
        entries.append(
            {"id": name, "feature_file": record["feature_file"]} if "feature_file" in record else record
        )

    if labels_written is None:
        # features remain scorable against labels supplied elsewhere
        (out / "report.json").write_text(json.dumps(report, indent=2))
        for entry in report["models"]:
            click.echo(f"{entry['id']}: {entry.get('error', 'ok')}")
        return
    _finish(out, Path(conll_path or sentences_path).stem, labels_written, num_classes, entries, report)


def _load_language_model(name: str, corpus):
    if name.startswith("tiny-random"):
        hidden = 32
        if ":" in name:
            hidden = int(name.split(":", 1)[1])
        vocab = language.WhitespaceVocab(corpus.sentences)
        return language.build_tiny_random_encoder(len(vocab), hidden_size=hidden), vocab
    from transformers import AutoModel, AutoTokenizer

    return AutoModel.from_pretrained(name), language.HubTokenizer(AutoTokenizer.from_pretrained(name))


if __name__ == "__main__":
    main(prog_name="hubextract")
