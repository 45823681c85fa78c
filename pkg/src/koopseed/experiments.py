"""Experiment orchestration: seeded-online vs batch-EDMD comparisons.

The pipeline derives a global Koopman matrix from the subsystem ODEs,
refines it online from a training trajectory, trains batch EDMD on the same
pairs, and scores both on held-out perturbed trajectories with the relative
l2 metric. Everything is driven by an ExperimentConfig and emits plain CSV.
"""

import dataclasses
import json
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .assembly import GlobalSeed, assemble_global
from .dictionary import Dictionary, build_dictionary
from .dynamics import (
    CoupledSystem,
    Coupling,
    VariableLayout,
    diffusive_coupling,
    perturb_initial,
    sample_initial,
    simulate,
    simulate_batch,
)
from .edmd import batch_edmd_from_psi, online_init, online_update_many
from .generator import PolynomialVectorField, build_generator, local_koopman
from .model import KoopmanModel, save_matrix_csv
from .spectral import (
    DefectiveDecompositionError,
    decompose,
    prediction_matrix,
    relative_l2_batch,
    state_projector,
)

METHOD_PROPOSED = "proposed"
METHOD_EDMD = "edmd"
METHODS = (METHOD_PROPOSED, METHOD_EDMD)

# Stable codes for per-purpose RNG streams; never renumber.
_STREAMS = {"train-init": 1, "test-perturb": 2}


def derived_seed(root_seed: int, purpose: str, *key) -> int:
    """Portable per-purpose integer seed derived from the experiment root seed."""
    entropy = (int(root_seed), _STREAMS[purpose]) + tuple(int(k) for k in key)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Full description of one benchmark run (system, sizes, seeds)."""

    name: str
    system: CoupledSystem
    degree: int
    dt: float
    train_steps: int
    train_burn_in: int
    test_count: int
    test_steps: int
    test_burn_in: int
    perturb_radius: float
    sigma: float
    checkpoint_stride: int
    nstep_horizon: int
    nstep_train_pairs: int
    spectrum_train_pairs: int
    init_ranges: tuple
    root_seed: int
    seeds: int
    max_pairs: int | None = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if self.train_steps < 1 or self.test_steps < 1:
            raise ValueError("trajectory lengths must be positive")
        if not 0 <= self.train_burn_in < self.train_steps:
            raise ValueError("train burn-in must be shorter than the trajectory")
        if not 0 <= self.test_burn_in < self.test_steps:
            raise ValueError("test burn-in must be shorter than the trajectory")
        if self.test_count < 1:
            raise ValueError("test_count must be >= 1")
        if self.checkpoint_stride < 1:
            raise ValueError("checkpoint_stride must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.perturb_radius <= 0:
            raise ValueError("perturb_radius must be positive")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if len(self.init_ranges) != self.system.dim:
            raise ValueError("one init range per state variable is required")
        pairs = self.train_pairs
        if self.max_pairs is not None and not 1 <= self.max_pairs <= pairs:
            raise ValueError(f"max_pairs must lie in [1, {pairs}]")
        if not 1 <= self.nstep_train_pairs <= pairs:
            raise ValueError(f"nstep_train_pairs must lie in [1, {pairs}]")
        if not 1 <= self.spectrum_train_pairs <= pairs:
            raise ValueError(f"spectrum_train_pairs must lie in [1, {pairs}]")
        if not 1 <= self.nstep_horizon <= self.test_length - 1:
            raise ValueError("nstep_horizon must fit inside the test trajectories")

    @property
    def train_pairs(self) -> int:
        return self.train_steps - self.train_burn_in

    @property
    def test_length(self) -> int:
        return self.test_steps - self.test_burn_in + 1

    def checkpoints(self) -> list:
        limit = self.max_pairs if self.max_pairs is not None else self.train_pairs
        cps = list(range(self.checkpoint_stride, limit + 1, self.checkpoint_stride))
        if not cps:
            cps = [limit]
        return cps

    def dictionary(self) -> Dictionary:
        return build_dictionary(self.system.dim, self.degree)


def _field_from_json(var_count: int, coordinates) -> PolynomialVectorField:
    components = [
        [(tuple(term["exponents"]), float(term["coeff"])) for term in coord]
        for coord in coordinates
    ]
    return PolynomialVectorField(var_count, components)


def _coupling_from_json(layout: VariableLayout, spec: dict) -> Coupling:
    target = int(spec["target"])
    source = int(spec["source"])
    strength = float(spec.get("strength", 1.0))
    di = layout.subsystem_dims[target]
    dj = layout.subsystem_dims[source]
    if spec.get("type") == "diffusive":
        fld = diffusive_coupling(
            di,
            dj,
            drive_coord=int(spec.get("drive_coord", di - 1)),
            observed_coord=int(spec.get("observed_coord", 0)),
        )
    else:
        fld = _field_from_json(di + dj, spec["coordinates"])
    return Coupling(target=target, source=source, strength=strength, field=fld)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed JSON."""
    dims = tuple(int(s["dim"]) for s in raw["subsystems"])
    layout = VariableLayout(dims)
    subsystems = [
        _field_from_json(int(s["dim"]), s["coordinates"]) for s in raw["subsystems"]
    ]
    couplings = [_coupling_from_json(layout, c) for c in raw.get("couplings", [])]
    system = CoupledSystem(subsystems=subsystems, couplings=couplings, layout=layout)
    return ExperimentConfig(
        name=str(raw["name"]),
        system=system,
        degree=int(raw["degree"]),
        dt=float(raw["dt"]),
        train_steps=int(raw["train_steps"]),
        train_burn_in=int(raw.get("train_burn_in", 0)),
        test_count=int(raw["test_count"]),
        test_steps=int(raw["test_steps"]),
        test_burn_in=int(raw.get("test_burn_in", 0)),
        perturb_radius=float(raw["perturb_radius"]),
        sigma=float(raw.get("sigma", 1.0)),
        checkpoint_stride=int(raw["checkpoint_stride"]),
        max_pairs=None if raw.get("max_pairs") is None else int(raw["max_pairs"]),
        nstep_horizon=int(raw["nstep_horizon"]),
        nstep_train_pairs=int(raw["nstep_train_pairs"]),
        spectrum_train_pairs=int(raw["spectrum_train_pairs"]),
        init_ranges=tuple((float(lo), float(hi)) for lo, hi in raw["init_ranges"]),
        root_seed=int(raw["root_seed"]),
        seeds=int(raw.get("seeds", 1)),
    )


def bundled_preset_names() -> list:
    files = resources.files("koopseed").joinpath("presets")
    return sorted(p.name[: -len(".preset")] for p in files.iterdir() if p.name.endswith(".preset"))


def load_config(name_or_path: str) -> ExperimentConfig:
    """Load a config from a JSON file path or a bundled preset name."""
    if os.path.exists(name_or_path):
        with open(name_or_path) as fh:
            return config_from_dict(json.load(fh))
    candidate = resources.files("koopseed").joinpath("presets", name_or_path + ".preset")
    if candidate.is_file():
        return config_from_dict(json.loads(candidate.read_text()))
    raise FileNotFoundError(
        f"no config file {name_or_path!r} and no bundled preset of that name "
        f"(bundled: {', '.join(bundled_preset_names())})"
    )


def override_config(config: ExperimentConfig, **changes) -> ExperimentConfig:
    """Return a copy with the given fields replaced (rechecks invariants)."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(config, **changes) if changes else config


# ---------------------------------------------------------------------------
# Seed derivation and data generation
# ---------------------------------------------------------------------------


def derive_seed_model(config: ExperimentConfig) -> GlobalSeed:
    """ODE-derived global Koopman matrix: per-subsystem generators advanced
    over one sampling interval and embedded into the global dictionary."""
    global_dict = config.dictionary()
    locals_ = []
    for fld in config.system.subsystems:
        local_dict = build_dictionary(fld.var_count, config.degree)
        gen = build_generator(fld, local_dict)
        locals_.append(local_koopman(gen, config.dt))
    return assemble_global(locals_, config.system.layout, global_dict)


def derive_seed(config: ExperimentConfig, out_path) -> GlobalSeed:
    """Derive the seed matrix and write it as a portable matrix CSV."""
    seed = derive_seed_model(config)
    save_matrix_csv(
        out_path,
        seed,
        extra_meta={"name": config.name, "dt": config.dt, "kind": "ode-derived-seed"},
    )
    return seed


@dataclass
class ExperimentData:
    """One seed repetition's datasets (burn-in already discarded)."""

    train_states: np.ndarray  # (train_pairs + 1, D)
    test_states: np.ndarray  # (test_count, test_length, D)
    train_x0: np.ndarray


def generate_data(config: ExperimentConfig, seed_index: int) -> ExperimentData:
    """Simulate the training trajectory and the perturbed test set.

    Test initial states perturb the sampled (pre-relaxation) training
    initial state; each test trajectory then runs the full test length and
    discards its own burn-in, mirroring the training protocol.
    """
    x0 = sample_initial(
        config.init_ranges, derived_seed(config.root_seed, "train-init", seed_index)
    )
    train = simulate(config.system, x0, config.train_steps, config.dt)
    train_states = train.states[config.train_burn_in :]

    x0s = np.stack(
        [
            perturb_initial(
                x0,
                config.perturb_radius,
                derived_seed(config.root_seed, "test-perturb", seed_index, t),
            )
            for t in range(config.test_count)
        ]
    )
    test = simulate_batch(config.system, x0s, config.test_steps, config.dt)
    return ExperimentData(
        train_states=train_states,
        test_states=test[:, config.test_burn_in :],
        train_x0=x0,
    )


def train_checkpoint_models(
    config: ExperimentConfig,
    data: ExperimentData,
    checkpoints,
    seed_model: GlobalSeed | None = None,
) -> dict:
    """Train both methods at every checkpoint pair count.

    The proposed method streams pairs through the online recursion starting
    from the ODE-derived seed; the baseline refits batch EDMD on the first m
    pairs. Returns {method: {pair_count: KoopmanModel}}.
    """
    dictionary = config.dictionary()
    if seed_model is None:
        seed_model = derive_seed_model(config)
    psi = dictionary.evaluate(data.train_states)
    psi_x, psi_y = psi[:-1], psi[1:]

    checkpoints = sorted(checkpoints)
    if checkpoints[-1] > psi_x.shape[0]:
        raise ValueError("checkpoint exceeds available training pairs")

    models = {METHOD_PROPOSED: {}, METHOD_EDMD: {}}
    state = online_init(seed_model, config.sigma)
    done = 0
    for m in checkpoints:
        state = online_update_many(state, psi_x[done:m], psi_y[done:m])
        done = m
        models[METHOD_PROPOSED][m] = KoopmanModel(
            dictionary, state.matrix.copy(), diagnostics={"pairs": m, "sigma": config.sigma}
        )
        models[METHOD_EDMD][m] = batch_edmd_from_psi(dictionary, psi_x[:m], psi_y[:m])
    return models


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def forecast_matrices(model: KoopmanModel, horizons) -> tuple:
    """D x N forecast matrices per horizon, via the spectral path when the
    eigenbasis is sound, otherwise via explicit matrix powers.

    Returns (matrices dict, path) with path in {"spectral", "matrix-power"}.
    """
    horizons = sorted(set(int(n) for n in horizons))
    try:
        dec = decompose(model)
        return {n: prediction_matrix(dec, n) for n in horizons}, "spectral"
    except (DefectiveDecompositionError, ValueError):
        B = state_projector(model.dictionary)
        out = {}
        Kn = np.eye(len(model.dictionary))
        step = 0
        for n in horizons:
            while step < n:
                Kn = model.matrix @ Kn
                step += 1
            out[n] = B @ Kn
        return out, "matrix-power"


def onestep_errors(forecast: np.ndarray, psi_test: np.ndarray, test_states: np.ndarray) -> np.ndarray:
    """Per-point one-step relative errors, shape (test_count, length-1)."""
    count, length, n_dic = psi_test.shape
    pred = (psi_test[:, :-1, :].reshape(-1, n_dic) @ forecast.T).reshape(
        count, length - 1, -1
    )
    true = test_states[:, 1:, :]
    return np.linalg.norm(pred - true, axis=-1) / np.linalg.norm(true, axis=-1)


def nstep_errors(forecasts: dict, psi0: np.ndarray, test_states: np.ndarray, horizon: int) -> np.ndarray:
    """Per-trajectory errors of forecasts from each test initial state,
    shape (horizon, test_count); row n-1 holds the n-step errors."""
    out = np.empty((horizon, psi0.shape[0]))
    for n in range(1, horizon + 1):
        pred = psi0 @ forecasts[n].T
        out[n - 1] = relative_l2_batch(test_states[:, n, :], pred)
    return out


def spectrum_of(model: KoopmanModel) -> np.ndarray:
    """Eigenvalues ordered by descending |mu|, then real, then imaginary part."""
    mu = np.linalg.eigvals(model.matrix)
    return mu[np.lexsort((-mu.imag, -mu.real, -np.abs(mu)))]


# ---------------------------------------------------------------------------
# Summaries and CSV emission
# ---------------------------------------------------------------------------


@dataclass
class SummaryRow:
    key: int  # checkpoint pair count, or forecast horizon n
    method: str
    mean: float
    std: float
    count: int


@dataclass
class ErrorSummary:
    """Per-checkpoint (or per-horizon) error statistics for each method."""

    rows: list

    def get(self, key: int, method: str) -> SummaryRow:
        for row in self.rows:
            if row.key == key and row.method == method:
                return row
        raise KeyError((key, method))

    def keys(self) -> list:
        seen = []
        for row in self.rows:
            if row.key not in seen:
                seen.append(row.key)
        return seen

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("checkpoint_or_n,method,mean,std,count\n")
            for r in self.rows:
                fh.write(
                    f"{r.key},{r.method},{format(r.mean, '.17g')},"
                    f"{format(r.std, '.17g')},{r.count}\n"
                )


def _summary_from_errors(per_key_errors: dict) -> ErrorSummary:
    rows = []
    for key in sorted(per_key_errors):
        for method in METHODS:
            err = per_key_errors[key][method]
            rows.append(
                SummaryRow(
                    key=key,
                    method=method,
                    mean=float(np.mean(err)),
                    std=float(np.std(err)),
                    count=int(err.size),
                )
            )
    return ErrorSummary(rows)


def _aggregate_summaries(per_seed: list) -> ErrorSummary:
    """Seed-averaged summary: mean of per-seed means and of per-seed stds."""
    rows = []
    for template in per_seed[0].rows:
        rs = [s.get(template.key, template.method) for s in per_seed]
        rows.append(
            SummaryRow(
                key=template.key,
                method=template.method,
                mean=float(np.mean([r.mean for r in rs])),
                std=float(np.mean([r.std for r in rs])),
                count=int(sum(r.count for r in rs)),
            )
        )
    return ErrorSummary(rows)


def _write_raw(path, header: str, columns: list) -> None:
    data = np.column_stack(columns)
    fmt = ["%d"] * (len(columns) - 1) + ["%.17g"]
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")


def _write_notes(path, notes: list) -> None:
    if notes:
        with open(path, "w", newline="\n") as fh:
            fh.writelines(line + "\n" for line in notes)


# ---------------------------------------------------------------------------
# Experiment drivers
# ---------------------------------------------------------------------------


def run_onestep_experiment(
    config: ExperimentConfig, out_dir=None, write_raw: bool = True
) -> ErrorSummary:
    """One-step-ahead error of both methods at every checkpoint.

    Repeats the full experiment for each RNG seed, emits per-seed summaries
    plus raw per-point errors, and returns the seed-averaged summary.
    """
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    checkpoints = config.checkpoints()
    dictionary = config.dictionary()
    seed_model = derive_seed_model(config)

    notes = []
    per_seed = []
    for s in range(config.seeds):
        data = generate_data(config, s)
        models = train_checkpoint_models(config, data, checkpoints, seed_model)
        psi_test = dictionary.evaluate(data.test_states)

        per_key = {}
        raw = {m: [] for m in METHODS}
        for cp in checkpoints:
            per_key[cp] = {}
            for method in METHODS:
                mats, path = forecast_matrices(models[method][cp], [1])
                if path != "spectral":
                    notes.append(
                        f"seed={s} checkpoint={cp} method={method} forecast-path={path}"
                    )
                err = onestep_errors(mats[1], psi_test, data.test_states)
                per_key[cp][method] = err
                raw[method].append(err)
        summary = _summary_from_errors(per_key)
        per_seed.append(summary)

        if out_dir is not None:
            summary.write_csv(os.path.join(out_dir, f"onestep_summary_seed{s}.csv"))
            if write_raw:
                n_traj, n_pts = raw[METHODS[0]][0].shape
                traj_col = np.repeat(np.arange(n_traj), n_pts)
                step_col = np.tile(np.arange(1, n_pts + 1), n_traj)
                for method in METHODS:
                    cks = np.concatenate(
                        [np.full(n_traj * n_pts, cp) for cp in checkpoints]
                    )
                    errs = np.concatenate([e.ravel() for e in raw[method]])
                    _write_raw(
                        os.path.join(out_dir, f"onestep_raw_seed{s}_{method}.csv"),
                        "checkpoint,traj,step,error",
                        [cks, np.tile(traj_col, len(checkpoints)), np.tile(step_col, len(checkpoints)), errs],
                    )

    aggregate = _aggregate_summaries(per_seed)
    if out_dir is not None:
        aggregate.write_csv(os.path.join(out_dir, "onestep_summary.csv"))
        _write_notes(os.path.join(out_dir, "onestep_notes.txt"), notes)
    return aggregate


def run_nstep_experiment(
    config: ExperimentConfig, out_dir=None, write_raw: bool = True
) -> ErrorSummary:
    """n-step forecast error from each test initial state, n = 1..horizon,
    with both methods trained on the configured pair count."""
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    pairs = config.nstep_train_pairs
    horizon = config.nstep_horizon
    dictionary = config.dictionary()
    seed_model = derive_seed_model(config)

    notes = []
    per_seed = []
    for s in range(config.seeds):
        data = generate_data(config, s)
        models = train_checkpoint_models(config, data, [pairs], seed_model)
        psi0 = dictionary.evaluate(data.test_states[:, 0, :])

        per_key = {}
        errs_by_method = {}
        for method in METHODS:
            mats, path = forecast_matrices(
                models[method][pairs], range(1, horizon + 1)
            )
            if path != "spectral":
                notes.append(f"seed={s} pairs={pairs} method={method} forecast-path={path}")
            errs_by_method[method] = nstep_errors(
                mats, psi0, data.test_states, horizon
            )
        for n in range(1, horizon + 1):
            per_key[n] = {m: errs_by_method[m][n - 1] for m in METHODS}
        summary = _summary_from_errors(per_key)
        per_seed.append(summary)

        if out_dir is not None:
            summary.write_csv(os.path.join(out_dir, f"nstep_summary_seed{s}.csv"))
            if write_raw:
                n_traj = config.test_count
                n_col = np.repeat(np.arange(1, horizon + 1), n_traj)
                traj_col = np.tile(np.arange(n_traj), horizon)
                for method in METHODS:
                    _write_raw(
                        os.path.join(out_dir, f"nstep_raw_seed{s}_{method}.csv"),
                        "n,traj,error",
                        [n_col, traj_col, errs_by_method[method].ravel()],
                    )

    aggregate = _aggregate_summaries(per_seed)
    if out_dir is not None:
        aggregate.write_csv(os.path.join(out_dir, "nstep_summary.csv"))
        _write_notes(os.path.join(out_dir, "nstep_notes.txt"), notes)
    return aggregate


def save_spectrum_csv(path, eigenvalues: np.ndarray) -> None:
    """Eigenvalues as CSV with columns re, im, abs."""
    with open(path, "w", newline="\n") as fh:
        fh.write("re,im,abs\n")
        for mu in eigenvalues:
            fh.write(
                f"{format(mu.real, '.17g')},{format(mu.imag, '.17g')},"
                f"{format(abs(mu), '.17g')}\n"
            )


def run_spectrum_export(
    config: ExperimentConfig,
    pair_count: int | None = None,
    out_dir=None,
    threshold: float = 0.99,
) -> dict:
    """Eigenvalue spectra of both methods at a fixed training size.

    Writes per-seed spectra CSVs plus a counts file of eigenvalues with
    |mu| > threshold; returns {"threshold", "counts": {method: [per seed]},
    "mean_counts": {method: float}}.
    """
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    pairs = pair_count if pair_count is not None else config.spectrum_train_pairs
    seed_model = derive_seed_model(config)

    counts = {m: [] for m in METHODS}
    for s in range(config.seeds):
        data = generate_data(config, s)
        models = train_checkpoint_models(config, data, [pairs], seed_model)
        for method in METHODS:
            mu = spectrum_of(models[method][pairs])
            counts[method].append(int((np.abs(mu) > threshold).sum()))
            if out_dir is not None:
                save_spectrum_csv(
                    os.path.join(out_dir, f"spectrum_seed{s}_{method}.csv"), mu
                )

    result = {
        "pairs": pairs,
        "threshold": threshold,
        "counts": counts,
        "mean_counts": {m: float(np.mean(counts[m])) for m in METHODS},
    }
    if out_dir is not None:
        with open(os.path.join(out_dir, "spectrum_counts.csv"), "w", newline="\n") as fh:
            fh.write("method,seed,count_above_threshold,threshold,pairs\n")
            for method in METHODS:
                for s, c in enumerate(counts[method]):
                    fh.write(f"{method},{s},{c},{format(threshold, '.17g')},{pairs}\n")
    return result
