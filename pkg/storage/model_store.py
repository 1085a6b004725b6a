import json
import os
import tempfile
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from boosting.mapping import RandomFeatureMap
from boosting.ridge import LinearModel
from boosting.trainer import EnsembleModel, FineTuneBlock
from utils.errors import AppError, ModelFormatError

FORMAT_VERSION = 1


class LinearModelRecord(BaseModel):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    weights: List[float] = Field(description="Row-major rows×cols matrix")
    bias: List[float]


class FeatureMapRecord(BaseModel):
    input_dims: int = Field(ge=1)
    node_size: int = Field(ge=1)
    activation: str
    seed_tag: int = 0
    projection: List[float] = Field(description="Row-major input_dims×node_size matrix")
    mu: List[float]
    sigma: List[float]


class BlockRecord(BaseModel):
    kind: Literal["DA", "SSL"]
    feature_map: FeatureMapRecord
    learners: List[LinearModelRecord]


class ModelFile(BaseModel):
    format_version: int = FORMAT_VERSION
    J: int = Field(ge=2, description="Number of classes")
    d: int = Field(ge=1, description="Feature dimensionality")
    ns: Optional[int] = Field(default=None, description="Node size of the block feature maps")
    lr: Optional[float] = Field(default=None, description="Learning rate; absent for a bare linear model")
    activation: Optional[str] = None
    initial: LinearModelRecord
    blocks: List[BlockRecord] = Field(default_factory=list)


# =============================================================================
# CONVERSION
# =============================================================================

def _floats(values) -> List[float]:
    return [float(v) for v in np.asarray(values, dtype=np.float64).reshape(-1)]


def _linear_record(model: LinearModel) -> LinearModelRecord:
    return LinearModelRecord(
        rows=model.outputs, cols=model.input_dims,
        weights=_floats(model.weights), bias=_floats(model.bias),
    )


def _linear_model(record: LinearModelRecord) -> LinearModel:
    if len(record.weights) != record.rows * record.cols or len(record.bias) != record.rows:
        raise ModelFormatError(f"linear model arrays do not match {record.rows}×{record.cols}")
    return LinearModel(
        weights=np.array(record.weights, dtype=np.float64).reshape(record.rows, record.cols),
        bias=np.array(record.bias, dtype=np.float64),
    )


def _map_record(feature_map: RandomFeatureMap) -> FeatureMapRecord:
    return FeatureMapRecord(
        input_dims=feature_map.input_dims, node_size=feature_map.node_size,
        activation=feature_map.activation, seed_tag=feature_map.seed_tag,
        projection=_floats(feature_map.projection), mu=_floats(feature_map.mu), sigma=_floats(feature_map.sigma),
    )


def _feature_map(record: FeatureMapRecord) -> RandomFeatureMap:
    if len(record.projection) != record.input_dims * record.node_size:
        raise ModelFormatError("projection size does not match input_dims × node_size")
    return RandomFeatureMap(
        projection=np.array(record.projection, dtype=np.float64).reshape(record.input_dims, record.node_size),
        mu=np.array(record.mu, dtype=np.float64),
        sigma=np.array(record.sigma, dtype=np.float64),
        activation=record.activation,
        seed_tag=record.seed_tag,
    )


def to_model_file(model: Union[EnsembleModel, LinearModel]) -> ModelFile:
    if isinstance(model, LinearModel):
        return ModelFile(J=model.outputs, d=model.input_dims, initial=_linear_record(model))
    blocks = [
        BlockRecord(
            kind=block.kind,
            feature_map=_map_record(block.feature_map),
            learners=[_linear_record(learner) for learner in block.learners],
        )
        for block in model.blocks
    ]
    first_map = model.blocks[0].feature_map if model.blocks else None
    return ModelFile(
        J=model.num_classes,
        d=model.dims,
        ns=first_map.node_size if first_map else None,
        lr=model.lr,
        activation=first_map.activation if first_map else None,
        initial=_linear_record(model.initial),
        blocks=blocks,
    )


def from_model_file(record: ModelFile) -> EnsembleModel:
    if record.format_version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format_version {record.format_version}")
    try:
        initial = _linear_model(record.initial)
        if (initial.outputs, initial.input_dims) != (record.J, record.d):
            raise ModelFormatError(f"initial model is {initial.outputs}×{initial.input_dims}, header says {record.J}×{record.d}")
        blocks = [
            FineTuneBlock(
                kind=block.kind,
                feature_map=_feature_map(block.feature_map),
                learners=tuple(_linear_model(learner) for learner in block.learners),
            )
            for block in record.blocks
        ]
        return EnsembleModel(initial=initial, blocks=tuple(blocks), lr=record.lr if record.lr is not None else 1.0)
    except ModelFormatError:
        raise
    except AppError as e:
        raise ModelFormatError(f"inconsistent model file: {e}")


# =============================================================================
# FILES
# =============================================================================

def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())  # Ensure it hits disk
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def save_model(path, model: Union[EnsembleModel, LinearModel]) -> Path:
    """Serialize to JSON; Python float repr keeps every value bit-exact."""
    path = Path(path)
    record = to_model_file(model)
    _atomic_write(path, json.dumps(record.model_dump(), indent=2) + "\n")
    return path


def read_model_file(path) -> ModelFile:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"model file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return ModelFile.model_validate(data)
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"{path} is not valid UTF-8 text: {e.reason}")
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not valid JSON: {e}")
    except ValidationError as e:
        raise ModelFormatError(f"{path} does not match the model schema: {e}")


def load_model(path) -> EnsembleModel:
    return from_model_file(read_model_file(path))


def load_linear_model(path) -> LinearModel:
    """The initial (or only) linear model stored in a model file."""
    return load_model(path).initial
