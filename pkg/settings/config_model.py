from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Activation = Literal["tanh", "sigmoid", "relu"]
Scenario = Literal["shift-sweep", "xi-sweep", "blocks-sweep", "removal-ablation", "sfda-pipeline", "mapping-sweep"]

SCENARIOS = ("shift-sweep", "xi-sweep", "blocks-sweep", "removal-ablation", "sfda-pipeline", "mapping-sweep")


class TrainConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    blocks: int = Field(default=100, ge=0, description="Number of fine-tuning blocks K (each is one DA and one SSL learner)")
    batch_size: int = Field(default=64, ge=1, description="Balanced-sampling batch size bs")
    xi: float = Field(default=1.0, ge=0.0, description="Noise magnitude for unlabeled target augmentation")
    node_size: int = Field(default=100, ge=1, description="Output dimensionality of each random feature map")
    lr: float = Field(default=0.1, gt=0.0, description="Learning rate applied to each normalized learner output")
    ridge_lambda: float = Field(default=0.01, ge=0.0, description="Ridge penalty of the base learners")
    seed: int = Field(default=2021, description="Seed of the single random stream used for training")
    deterministic: bool = Field(default=False, description="Fit on all rows with weighted ridge instead of balanced sampling")
    remove_misclassified_source: bool = Field(default=True, description="Zero the weights of misclassified source samples")
    activation: Activation = Field(default="tanh", description="Activation of the random feature maps")
    use_mapping: bool = Field(default=True, description="Use random projections; False uses z-scored raw features")
    threads: int = Field(default=1, ge=1, description="Upper bound on parallel per-class ridge fits")


class SynthConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    per_class: int = Field(default=100, ge=1, description="Virtual source samples generated per class")
    beta_a: float = Field(default=0.75, gt=0.0, description="First Beta parameter for soft-label mixing")
    beta_b: float = Field(default=0.75, gt=0.0, description="Second Beta parameter for soft-label mixing")
    ridge_lambda: float = Field(default=1e-6, ge=0.0, description="Ridge penalty of the pseudo-inverse")
    seed: int = Field(default=2021, description="Seed of the synthesis random stream")


class BenchConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    scenario: Scenario = Field(default="blocks-sweep", description="Experiment grid to run")
    seeds: int = Field(default=5, ge=1, description="Number of seeds per configuration")
    base_seed: int = Field(default=2021, description="First seed; the others follow consecutively")
    num_classes: int = Field(default=4, ge=2, description="Classes in the synthetic benchmark")
    dims: int = Field(default=20, ge=2, description="Feature dimensionality of the synthetic benchmark")
    n_source: int = Field(default=400, ge=1, description="Source samples")
    n_target: int = Field(default=400, ge=1, description="Target samples (labeled + unlabeled + test)")
    n_shot: int = Field(default=3, ge=1, description="Labeled target samples per class")
    shift: float = Field(default=0.75, ge=0.0, description="Domain shift magnitude")
    blocks: int = Field(default=50, ge=0, description="Fine-tuning blocks for every trained model")
    init_lambda: float = Field(default=0.01, ge=0.0, description="Ridge penalty of the bootstrap initial model")
    label_noise: float = Field(default=0.2, ge=0.0, lt=1.0, description="Source label-flip fraction in removal-ablation")


class ProjectConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    train: TrainConfig = Field(default_factory=TrainConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
