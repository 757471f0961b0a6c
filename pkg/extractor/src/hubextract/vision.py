"""Pooled-feature extraction from torchvision image classifiers.

Features are taken after the network's global pooling, immediately before
the classification head (which is replaced with an identity). Checkpoint
weights are fetched when available; if the download fails the architecture
falls back to random initialization and the failure is recorded, so a
batch over many models never aborts on one of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import models as tvm
from torchvision import transforms

# model name -> (constructor, attribute holding the classification head)
MODEL_REGISTRY = {
    "resnet18": (tvm.resnet18, "fc"),
    "resnet34": (tvm.resnet34, "fc"),
    "resnet50": (tvm.resnet50, "fc"),
    "mobilenet_v3_small": (tvm.mobilenet_v3_small, "classifier"),
    "mobilenet_v2": (tvm.mobilenet_v2, "classifier"),
    "shufflenet_v2_x0_5": (tvm.shufflenet_v2_x0_5, "fc"),
    "densenet121": (tvm.densenet121, "classifier"),
}

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


@dataclass
class ImageDataset:
    paths: list[Path]
    labels: np.ndarray
    class_names: list[str]


def load_image_folder(root) -> ImageDataset:
    """Directory-per-class image dataset (alphabetical class indexing)."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"not a dataset directory: {root}")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"no class subdirectories under {root}")
    paths: list[Path] = []
    labels: list[int] = []
    for index, class_dir in enumerate(class_dirs):
        files = sorted(
            p for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
        )
        paths.extend(files)
        labels.extend([index] * len(files))
    if not paths:
        raise ValueError(f"no images found under {root}")
    return ImageDataset(
        paths=paths,
        labels=np.array(labels, dtype=np.int64),
        class_names=[d.name for d in class_dirs],
    )


def build_headless(name: str, pretrained: bool) -> tuple[torch.nn.Module, str | None]:
    """Instantiate a registry model with its classification head removed.

    Returns the model and a warning string when pretrained weights were
    requested but could not be loaded.
    """
    if name not in MODEL_REGISTRY:
        raise ValueError(f"unknown model {name!r}; known: {sorted(MODEL_REGISTRY)}")
    constructor, head_attr = MODEL_REGISTRY[name]
    warning = None
    if pretrained:
        try:
            model = constructor(weights="DEFAULT")
        except Exception as exc:  # download failure, checksum, ...
            warning = f"pretrained weights unavailable ({type(exc).__name__}); using random initialization"
            model = constructor(weights=None)
    else:
        model = constructor(weights=None)
    setattr(model, head_attr, torch.nn.Identity())
    model.eval()
    return model, warning


def extract_image_features(
    model: torch.nn.Module,
    dataset: ImageDataset,
    image_size: int = 224,
    batch_size: int = 32,
    device: str = "cpu",
) -> np.ndarray:
    """n x D float64 matrix of pooled features, rows aligned with dataset order."""
    transform = transforms.Compose(
        [
            transforms.Resize((image_size, image_size)),
            transforms.ToTensor(),
            transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
        ]
    )
    model = model.to(device)
    chunks = []
    with torch.no_grad():
        for start in range(0, len(dataset.paths), batch_size):
            batch_paths = dataset.paths[start : start + batch_size]
            batch = torch.stack(
                [transform(Image.open(p).convert("RGB")) for p in batch_paths]
            ).to(device)
            out = model(batch)
            if out.ndim > 2:
                out = torch.flatten(torch.nn.functional.adaptive_avg_pool2d(out, 1), 1)
            chunks.append(out.cpu().double().numpy())
    return np.concatenate(chunks, axis=0)
