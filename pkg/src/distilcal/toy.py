"""Desk-scale multi-head classifier for exercising the losses end to end.

The network is deliberately tiny: one affine trunk with a tanh nonlinearity,
shared by independently parametrized affine heads ("sl" for the supervised
task, "kd_<teacher>" per distillation stream). Parameters live in one flat
float64 vector with named views, backpropagation is written by hand, and all
randomness flows from explicit seeds, so runs are bit-reproducible.

Teachers are the same architecture with a wider trunk trained on more data,
which gives distillation a genuine quality gap to transfer.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .calibration import PredictionRecord, ReliabilityReport, ece, rank_confidence_correct
from .errors import ConfigurationError, InvalidInputError, InvalidParameterError
from .losses import batch_cross_entropy
from .probs import softmax_t

_METHODS = ("baseline", "label_smooth", "lst", "multitask")


def _derive_seed(seed: int, tag: str) -> int:
    """Stable child seed for one named component of a run."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(tag.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class SyntheticTask:
    """Gaussian-cluster classification task with an optional coarse relabeling."""

    num_classes: int
    input_dim: int
    cluster_means: np.ndarray
    noise_sigma: float
    coarse_map: Optional[np.ndarray] = None

    def __post_init__(self):
        means = np.asarray(self.cluster_means, dtype=np.float64)
        if means.shape != (self.num_classes, self.input_dim):
            raise InvalidInputError(
                f"cluster_means shape {means.shape} does not match "
                f"({self.num_classes}, {self.input_dim})"
            )
        if len(np.unique(means, axis=0)) != self.num_classes:
            raise InvalidInputError("cluster means must be distinct")
        if self.noise_sigma < 0.0:
            raise InvalidParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        object.__setattr__(self, "cluster_means", means)
        if self.coarse_map is not None:
            cm = np.asarray(self.coarse_map, dtype=np.int64)
            if cm.shape != (self.num_classes,):
                raise InvalidInputError("coarse_map needs one entry per fine class")
            if set(cm.tolist()) != set(range(int(cm.max()) + 1)):
                raise InvalidInputError("coarse_map must be surjective onto 0..max")
            object.__setattr__(self, "coarse_map", cm)

    @property
    def num_coarse(self) -> int:
        if self.coarse_map is None:
            raise InvalidInputError("task has no coarse relabeling")
        return int(self.coarse_map.max()) + 1


def make_task(
    num_classes: int = 10,
    input_dim: int = 16,
    coarse_classes: Optional[int] = 3,
    noise_sigma: float = 1.0,
    mean_scale: float = 1.0,
    seed: int = 0,
) -> SyntheticTask:
    """Random cluster means plus a round-robin fine-to-coarse relabeling."""
    rng = np.random.default_rng(seed)
    means = mean_scale * rng.standard_normal((num_classes, input_dim))
    coarse = None
    if coarse_classes is not None:
        if not 2 <= coarse_classes <= num_classes:
            raise InvalidParameterError(
                f"coarse_classes must be in [2, {num_classes}], got {coarse_classes}"
            )
        coarse = np.arange(num_classes) % coarse_classes
    return SyntheticTask(
        num_classes=num_classes,
        input_dim=input_dim,
        cluster_means=means,
        noise_sigma=noise_sigma,
        coarse_map=coarse,
    )


def generate_data(task: SyntheticTask, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """n Gaussian draws around round-robin class means; deterministic per seed."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    y = np.arange(n) % task.num_classes
    x = task.cluster_means[y] + task.noise_sigma * rng.standard_normal((n, task.input_dim))
    return x, y


class ToyNetwork:
    """Affine trunk + tanh, shared by named affine heads; flat parameters.

    Each component (the trunk and every head) is initialized from its own
    seed stream derived from ``(rng_seed, component name)``, uniform in
    ``[-s, s]`` with ``s = 1/sqrt(fan_in)``. Adding or removing a head
    therefore never changes how the remaining components initialize.
    """

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        head_dims: Mapping[str, int],
        rng_seed: int,
    ):
        if input_dim < 1 or hidden_dim < 1:
            raise InvalidParameterError("input_dim and hidden_dim must be >= 1")
        if not head_dims:
            raise InvalidParameterError("need at least one head")
        for name, k in head_dims.items():
            if k < 2:
                raise InvalidParameterError(f"head {name!r} needs >= 2 classes, got {k}")
        self.input_dim = int(input_dim)
        self.hidden_dim = int(hidden_dim)
        self.head_dims = {str(n): int(k) for n, k in sorted(head_dims.items())}
        self.rng_seed = int(rng_seed)

        layout: list[tuple[str, tuple[int, ...]]] = [
            ("trunk.W", (hidden_dim, input_dim)),
            ("trunk.b", (hidden_dim,)),
        ]
        for name, k in self.head_dims.items():
            layout.append((f"{name}.W", (k, hidden_dim)))
            layout.append((f"{name}.b", (k,)))
        total = sum(int(np.prod(shape)) for _, shape in layout)
        self.params = np.empty(total)
        self._layout: dict[str, tuple[int, tuple[int, ...]]] = {}
        self._views: dict[str, np.ndarray] = {}
        offset = 0
        for name, shape in layout:
            size = int(np.prod(shape))
            self._layout[name] = (offset, shape)
            self._views[name] = self.params[offset : offset + size].reshape(shape)
            offset += size

        self._init_component("trunk", fan_in=input_dim)
        for name in self.head_dims:
            self._init_component(name, fan_in=hidden_dim)

    def _init_component(self, name: str, fan_in: int) -> None:
        rng = np.random.default_rng(
            np.random.SeedSequence([self.rng_seed, zlib.crc32(name.encode("utf-8"))])
        )
        s = 1.0 / np.sqrt(fan_in)
        w = self._views[f"{name}.W"]
        w[...] = rng.uniform(-s, s, size=w.shape)
        b = self._views[f"{name}.b"]
        b[...] = rng.uniform(-s, s, size=b.shape)

    def view(self, name: str) -> np.ndarray:
        """Writable view into the flat parameter vector."""
        return self._views[name]

    @property
    def num_params(self) -> int:
        return self.params.size

    def forward_batch(self, inputs: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Hidden activations and per-head logits for a (B, d) batch."""
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise InvalidInputError(
                f"expected inputs of shape (B, {self.input_dim}), got {x.shape}"
            )
        hidden = np.tanh(x @ self._views["trunk.W"].T + self._views["trunk.b"])
        logits = {
            name: hidden @ self._views[f"{name}.W"].T + self._views[f"{name}.b"]
            for name in self.head_dims
        }
        return hidden, logits

    def forward(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Per-head logit vectors for a single input."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise InvalidInputError(f"expected a 1-D input, got shape {x.shape}")
        _, logits = self.forward_batch(x[None, :])
        return {name: lg[0] for name, lg in logits.items()}


@dataclass(frozen=True)
class TrainConfig:
    """Method selection plus optimizer settings; seed drives batch shuffling."""

    method: str
    epochs: int = 25
    learning_rate: float = 0.1
    batch_size: int = 32
    seed: int = 0
    lam: float = 0.5
    epsilon: float = 0.1
    temperature: float = 1.0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigurationError(
                f"method must be one of {_METHODS}, got {self.method!r}"
            )
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidParameterError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0.0:
            raise InvalidParameterError("learning_rate must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParameterError(f"lam must be in [0, 1], got {self.lam}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidParameterError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.temperature <= 0.0:
            raise InvalidParameterError("temperature must be positive")


def _check_teachers(
    cfg: TrainConfig,
    teacher_logits: Optional[Mapping[str, np.ndarray]],
) -> dict[str, np.ndarray]:
    if cfg.method in ("baseline", "label_smooth"):
        return {}
    if not teacher_logits:
        raise ConfigurationError(f"method {cfg.method!r} requires teacher logits")
    if cfg.method == "lst" and "fine" not in teacher_logits:
        raise ConfigurationError("lst requires a 'fine' teacher stream")
    if cfg.method == "lst":
        return {"fine": np.asarray(teacher_logits["fine"], dtype=np.float64)}
    return {k: np.asarray(v, dtype=np.float64) for k, v in sorted(teacher_logits.items())}


def network_loss_and_grad(
    net: ToyNetwork,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    teacher_logits: Optional[Mapping[str, np.ndarray]] = None,
) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient w.r.t. the flat parameters."""
    teachers = _check_teachers(cfg, teacher_logits)
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels)
    hidden, logits = net.forward_batch(x)
    b = x.shape[0]
    rows = np.arange(b)
    k = net.head_dims["sl"]

    dlogits: dict[str, np.ndarray] = {}
    if cfg.method in ("baseline", "label_smooth", "lst"):
        if cfg.method == "baseline":
            target = np.zeros((b, k))
            target[rows, y] = 1.0
        elif cfg.method == "label_smooth":
            target = np.full((b, k), cfg.epsilon / k)
            target[rows, y] += 1.0 - cfg.epsilon
        else:
            soft = softmax_t(teachers["fine"], cfg.temperature)
            target = np.zeros((b, k))
            target[rows, y] = 1.0
            target = cfg.lam * target + (1.0 - cfg.lam) * soft
        values, grads = batch_cross_entropy(logits["sl"], target)
        value = float(values.mean())
        dlogits["sl"] = grads / b
    else:  # multitask
        onehot = np.zeros((b, k))
        onehot[rows, y] = 1.0
        sl_values, sl_grads = batch_cross_entropy(logits["sl"], onehot)
        value = cfg.lam * float(sl_values.mean())
        dlogits["sl"] = (cfg.lam / b) * sl_grads
        m = len(teachers)
        for tid, t_logits in teachers.items():
            head = f"kd_{tid}"
            if head not in net.head_dims:
                raise ConfigurationError(f"network has no head {head!r} for teacher {tid!r}")
            soft = softmax_t(t_logits, cfg.temperature)
            kd_values, kd_grads = batch_cross_entropy(logits[head], soft)
            value += (1.0 - cfg.lam) * float(kd_values.mean()) / m
            dlogits[head] = ((1.0 - cfg.lam) / (m * b)) * kd_grads

    grad = np.zeros_like(net.params)

    def gview(name: str) -> np.ndarray:
        offset, shape = net._layout[name]
        return grad[offset : offset + int(np.prod(shape))].reshape(shape)

    d_hidden = np.zeros_like(hidden)
    for head in sorted(dlogits):
        dl = dlogits[head]
        gview(f"{head}.W")[...] = dl.T @ hidden
        gview(f"{head}.b")[...] = dl.sum(axis=0)
        d_hidden += dl @ net.view(f"{head}.W")
    d_pre = d_hidden * (1.0 - hidden**2)
    gview("trunk.W")[...] = d_pre.T @ x
    gview("trunk.b")[...] = d_pre.sum(axis=0)
    return value, grad


def train(
    net: ToyNetwork,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    teacher_logits: Optional[Mapping[str, np.ndarray]] = None,
) -> tuple[ToyNetwork, list[float]]:
    """Mini-batch SGD in place; returns the net and the per-epoch mean loss."""
    teachers = _check_teachers(cfg, teacher_logits)
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels)
    n = x.shape[0]
    for tid, t_logits in teachers.items():
        if t_logits.shape[0] != n:
            raise ConfigurationError(
                f"teacher {tid!r} provides {t_logits.shape[0]} rows for {n} samples"
            )
    rng = np.random.default_rng(cfg.seed)
    curve: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            batch_teachers = {tid: t[idx] for tid, t in teachers.items()}
            value, grad = network_loss_and_grad(net, x[idx], y[idx], cfg, batch_teachers)
            net.params -= cfg.learning_rate * grad
            epoch_loss += value * len(idx)
        curve.append(epoch_loss / n)
    return net, curve


@dataclass
class EvalResult:
    """Rank-1 accuracy plus one reliability report per requested rank."""

    accuracy: float
    reports: dict[int, ReliabilityReport]


def evaluate(
    net: ToyNetwork,
    inputs: np.ndarray,
    labels: np.ndarray,
    ranks: Sequence[int] = (1, 2, 3),
    num_bins: int = 15,
) -> EvalResult:
    """Feed the supervised head's softmax into the calibration module."""
    _, logits = net.forward_batch(np.asarray(inputs, dtype=np.float64))
    probs = softmax_t(logits["sl"])
    records = [PredictionRecord(probs[i], int(labels[i])) for i in range(len(labels))]
    _, correct = rank_confidence_correct(records, 1)
    reports = {int(r): ece(records, int(r), num_bins) for r in ranks}
    return EvalResult(accuracy=float(correct.mean()), reports=reports)


def pooled_gap(records: list[PredictionRecord], rank: int) -> float:
    """Signed overall (confidence - accuracy) at a rank; negative = under-confident."""
    conf, correct = rank_confidence_correct(records, rank)
    return float(conf.mean() - correct.mean())


def make_student(task: SyntheticTask, hidden_dim: int, seed: int) -> ToyNetwork:
    """Student with a supervised head plus distillation heads per available unit."""
    heads = {"sl": task.num_classes, "kd_fine": task.num_classes}
    if task.coarse_map is not None:
        heads["kd_coarse"] = task.num_coarse
    return ToyNetwork(task.input_dim, hidden_dim, heads, seed)


def make_teacher(
    task: SyntheticTask,
    seed: int,
    coarse: bool = False,
    hidden_dim: int = 128,
    n_samples: int = 20000,
    epochs: int = 15,
    learning_rate: float = 0.1,
    batch_size: int = 64,
) -> ToyNetwork:
    """Wider single-head network trained with plain cross-entropy."""
    k = task.num_coarse if coarse else task.num_classes
    net = ToyNetwork(task.input_dim, hidden_dim, {"sl": k}, _derive_seed(seed, "teacher-init"))
    x, y = generate_data(task, n_samples, _derive_seed(seed, "teacher-data"))
    if coarse:
        y = task.coarse_map[y]
    cfg = TrainConfig(
        method="baseline",
        epochs=epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        seed=_derive_seed(seed, "teacher-shuffle"),
    )
    train(net, x, y, cfg)
    return net


def teacher_logits_on(teacher: ToyNetwork, inputs: np.ndarray) -> np.ndarray:
    """Teacher's raw output logits on a batch of inputs."""
    _, logits = teacher.forward_batch(np.asarray(inputs, dtype=np.float64))
    return logits["sl"]


@dataclass(frozen=True)
class SweepConfig:
    """Everything a lambda sweep needs besides the grid itself."""

    num_classes: int = 10
    input_dim: int = 16
    coarse_classes: Optional[int] = 3
    noise_sigma: float = 1.0
    mean_scale: float = 1.0
    task_seed: int = 0
    n_train: int = 2000
    n_test: int = 2000
    hidden_dim: int = 32
    epochs: int = 25
    learning_rate: float = 0.1
    batch_size: int = 32
    teacher_hidden_multiplier: int = 4
    teacher_data_multiplier: int = 10
    teacher_epochs: int = 15
    lst_temperature: float = 5.0
    multitask_temperature: float = 1.0
    hierarchical: bool = False
    eval_bins: int = 15


@dataclass(frozen=True)
class SweepRow:
    method: str
    lam: float
    seed: int
    acc: float
    ece1: float
    ece2: float
    ece3: float


def sweep_lambda(
    cfg: SweepConfig,
    lambdas: Sequence[float],
    methods: Sequence[str],
    seeds: Sequence[int],
) -> list[SweepRow]:
    """Train and evaluate every (method, lambda, seed) cell of the grid.

    Within one seed, data and teachers are generated once and shared across
    all cells; the student always restarts from the same seed-determined
    initialization, so cells are independent and the output is deterministic.
    """
    if not lambdas or not methods or not seeds:
        raise InvalidInputError("lambdas, methods, and seeds must be non-empty")
    for m in methods:
        if m not in ("lst", "multitask"):
            raise InvalidParameterError(f"sweep methods are 'lst'/'multitask', got {m!r}")

    task = make_task(
        num_classes=cfg.num_classes,
        input_dim=cfg.input_dim,
        coarse_classes=cfg.coarse_classes,
        noise_sigma=cfg.noise_sigma,
        mean_scale=cfg.mean_scale,
        seed=cfg.task_seed,
    )
    results: dict[tuple[str, float, int], SweepRow] = {}
    for seed in seeds:
        x_train, y_train = generate_data(task, cfg.n_train, _derive_seed(seed, "train"))
        x_test, y_test = generate_data(task, cfg.n_test, _derive_seed(seed, "test"))
        fine_teacher = make_teacher(
            task,
            _derive_seed(seed, "teacher-fine"),
            hidden_dim=cfg.hidden_dim * cfg.teacher_hidden_multiplier,
            n_samples=cfg.n_train * cfg.teacher_data_multiplier,
            epochs=cfg.teacher_epochs,
            learning_rate=cfg.learning_rate,
            batch_size=cfg.batch_size,
        )
        streams = {"fine": teacher_logits_on(fine_teacher, x_train)}
        if cfg.hierarchical and task.coarse_map is not None:
            coarse_teacher = make_teacher(
                task,
                _derive_seed(seed, "teacher-coarse"),
                coarse=True,
                hidden_dim=cfg.hidden_dim * cfg.teacher_hidden_multiplier,
                n_samples=cfg.n_train * cfg.teacher_data_multiplier,
                epochs=cfg.teacher_epochs,
                learning_rate=cfg.learning_rate,
                batch_size=cfg.batch_size,
            )
            streams["coarse"] = teacher_logits_on(coarse_teacher, x_train)
        for method in methods:
            temperature = (
                cfg.lst_temperature if method == "lst" else cfg.multitask_temperature
            )
            method_streams = {"fine": streams["fine"]} if method == "lst" else streams
            for lam in lambdas:
                student = make_student(task, cfg.hidden_dim, _derive_seed(seed, "student"))
                tcfg = TrainConfig(
                    method=method,
                    epochs=cfg.epochs,
                    learning_rate=cfg.learning_rate,
                    batch_size=cfg.batch_size,
                    seed=_derive_seed(seed, "shuffle"),
                    lam=float(lam),
                    temperature=temperature,
                )
                train(student, x_train, y_train, tcfg, method_streams)
                ev = evaluate(student, x_test, y_test, ranks=(1, 2, 3), num_bins=cfg.eval_bins)
                results[(method, float(lam), int(seed))] = SweepRow(
                    method=method,
                    lam=float(lam),
                    seed=int(seed),
                    acc=ev.accuracy,
                    ece1=ev.reports[1].ece,
                    ece2=ev.reports[2].ece,
                    ece3=ev.reports[3].ece,
                )
    return [
        results[(m, float(lam), int(s))]
        for m in methods
        for lam in lambdas
        for s in seeds
    ]


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    """Fixed-format results table; byte-stable for golden-file comparison."""
    lines = ["method,lambda,seed,acc,ece1,ece2,ece3"]
    for r in rows:
        lines.append(
            f"{r.method},{r.lam:.6f},{r.seed},"
            f"{r.acc:.6f},{r.ece1:.6f},{r.ece2:.6f},{r.ece3:.6f}"
        )
    return "\n".join(lines) + "\n"
