//! The coupled time loop: one phase-field step with the current velocity,
//! then one momentum step with the fresh phase field and chemical potential.
//! Every step appends a full energy-bookkeeping record (total energy and its
//! parts, dissipation rates, the discrete energy-identity residual, mass,
//! separation margin).

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, norm_l2_vec, Domain, ScalarField, VectorField};
use crate::kernel::{KernelKind, KernelSpec};
use crate::nch::{
    ch_energy, ch_step, separation_margin, ChState, ChStepParams, FluxScheme,
};
use crate::ns::{density, kinetic_energy, ns_step, viscosity, viscous_dissipation, FluidParams, NsState};
use crate::potential::{PotentialSpec, YosidaParams};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Analytic, reproducible initial phase-field shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// tanh disc of the first phase centered in the domain.
    Bubble {
        amplitude: f64,
        radius: f64,
        width: f64,
    },
    /// Low-mode random superposition rescaled to the requested amplitude.
    RandomMix { seed: u64, amplitude: f64 },
    /// Horizontal layering with an optional sinusoidal interface ripple.
    Stratified {
        amplitude: f64,
        width: f64,
        ripple: f64,
    },
}

impl InitialCondition {
    pub fn amplitude(&self) -> f64 {
        match self {
            InitialCondition::Bubble { amplitude, .. }
            | InitialCondition::RandomMix { amplitude, .. }
            | InitialCondition::Stratified { amplitude, .. } => *amplitude,
        }
    }

    pub fn build(&self, domain: Domain) -> ScalarField {
        match *self {
            InitialCondition::Bubble {
                amplitude,
                radius,
                width,
            } => {
                let (cx, cy) = (0.5 * domain.lx, 0.5 * domain.ly);
                ScalarField::from_fn(domain, |x, y| {
                    let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    amplitude * ((radius - r) / width).tanh()
                })
            }
            InitialCondition::RandomMix { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let modes: Vec<(f64, f64, f64)> = (1..=4)
                    .flat_map(|k| (1..=4).map(move |l| (k, l)))
                    .map(|(k, l)| {
                        (
                            k as f64 * std::f64::consts::PI,
                            l as f64 * std::f64::consts::PI,
                            rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect();
                let mut f = ScalarField::from_fn(domain, |x, y| {
                    modes
                        .iter()
                        .map(|(kx, ky, c)| c * (kx * x / domain.lx).cos() * (ky * y / domain.ly).cos())
                        .sum()
                });
                let peak = f.max_abs().max(f64::MIN_POSITIVE);
                for v in &mut f.values {
                    *v *= amplitude / peak;
                }
                f
            }
            InitialCondition::Stratified {
                amplitude,
                width,
                ripple,
            } => ScalarField::from_fn(domain, |x, y| {
                let y0 = 0.5 * domain.ly
                    + ripple * (2.0 * std::f64::consts::PI * x / domain.lx).cos();
                amplitude * ((y - y0) / width).tanh()
            }),
        }
    }
}

/// Cahn-Hilliard solver settings of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChSettings {
    pub lambda: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub flux: FluxScheme,
}

impl Default for ChSettings {
    fn default() -> Self {
        ChSettings {
            lambda: 1e-4,
            newton_tol: 1e-10,
            newton_max: 50,
            flux: FluxScheme::Upwind,
        }
    }
}

/// Output cadences in steps; 0 disables the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputCadence {
    pub snapshot_every: usize,
    pub checkpoint_every: usize,
}

impl Default for OutputCadence {
    fn default() -> Self {
        OutputCadence {
            snapshot_every: 0,
            checkpoint_every: 0,
        }
    }
}

/// Full description of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub domain: Domain,
    pub fluid: FluidParams,
    pub potential: PotentialSpec,
    pub kernel_kind: KernelKind,
    pub kernel_strength: f64,
    pub ch: ChSettings,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub output: OutputCadence,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidValue {
                key: "time.dt".into(),
                reason: "must be positive".into(),
            });
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidValue {
                key: "time.t_end".into(),
                reason: "must be non-negative".into(),
            });
        }
        let amp = self.initial.amplitude();
        if !(amp > 0.0 && amp <= 0.95) {
            return Err(Error::InvalidValue {
                key: "initial.amplitude".into(),
                reason: format!(
                    "initial field must be separated: amplitude in (0, 0.95], got {amp}"
                ),
            });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 0.5).floor() as usize
    }
}

/// Coupled state: flow and phase share the clock.
#[derive(Debug, Clone)]
pub struct SimState {
    pub ns: NsState,
    pub ch: ChState,
    pub step: usize,
}

/// One row of per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRecord {
    pub t: f64,
    pub e_total: f64,
    pub e_kin: f64,
    pub e_nloc: f64,
    pub dissipation: f64,
    pub grad_mu_sq: f64,
    pub residual: f64,
    pub mass: f64,
    pub sep_margin: f64,
    pub u_l2: f64,
}

/// Per-step records; one per state visited, so length = step count + 1.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    pub records: Vec<LedgerRecord>,
}

impl EnergyLedger {
    pub fn last(&self) -> Option<&LedgerRecord> {
        self.records.last()
    }
}

/// Signed energy-identity residual of step n -> n+1:
/// r_n = E^{n+1} - E^n + dt (dissipation^{n+1} + |grad mu^{n+1}|^2).
pub fn energy_identity_residual(ledger: &EnergyLedger, n: usize, dt: f64) -> Result<f64> {
    if n + 1 >= ledger.records.len() {
        return Err(Error::InvalidValue {
            key: "n".into(),
            reason: format!(
                "step {n}+1 outside the ledger ({} records)",
                ledger.records.len()
            ),
        });
    }
    let a = &ledger.records[n];
    let b = &ledger.records[n + 1];
    Ok(b.e_total - a.e_total + dt * (b.dissipation + b.grad_mu_sq))
}

/// A stored field snapshot emitted at the output cadence.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub phi: ScalarField,
    pub mu: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
}

impl Snapshot {
    fn of(state: &SimState) -> Snapshot {
        Snapshot {
            step: state.step,
            t: state.ch.t,
            phi: state.ch.phi.clone(),
            mu: state.ch.mu.clone(),
            u: state.ns.u.clone(),
            p: state.ns.p.field.clone(),
        }
    }
}

/// Everything a completed in-memory run produces.
#[derive(Debug)]
pub struct RunOutput {
    pub final_state: SimState,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<Snapshot>,
}

/// A configured simulation with its interaction kernel bound to the grid.
pub struct Simulation {
    pub cfg: SimConfig,
    pub kernel: KernelSpec,
    ch_params: ChStepParams,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let kernel = KernelSpec::new(cfg.kernel_kind, cfg.kernel_strength, cfg.domain)?;
        let yosida = YosidaParams::for_kernel(cfg.ch.lambda, kernel.w11_norm())?;
        let ch_params = ChStepParams {
            dt: cfg.dt,
            yosida,
            newton_tol: cfg.ch.newton_tol,
            newton_max: cfg.ch.newton_max,
            flux: cfg.ch.flux,
        };
        Ok(Simulation {
            cfg,
            kernel,
            ch_params,
        })
    }

    pub fn ch_params(&self) -> &ChStepParams {
        &self.ch_params
    }

    /// State at t = 0: resting flow, the configured initial phase field.
    pub fn initial_state(&self) -> Result<SimState> {
        let phi = self.cfg.initial.build(self.cfg.domain);
        let ch = ChState::new(phi, &self.kernel, &self.cfg.potential)?;
        Ok(SimState {
            ns: NsState::rest(self.cfg.domain),
            ch,
            step: 0,
        })
    }

    /// Total energy E = (1/2) int rho |u|^2 + int F(phi) - (1/2) int (J*phi) phi.
    pub fn total_energy(&self, s: &SimState) -> Result<f64> {
        let rho = density(&s.ch.phi, &self.cfg.fluid);
        let kin = kinetic_energy(&s.ns.u, &rho);
        let nloc = ch_energy(&s.ch.phi, &self.kernel, &self.cfg.potential)?;
        Ok(kin + nloc)
    }

    /// Ledger row for the current state; `prev` supplies the previous row so
    /// the energy-identity residual can be attached to the new one.
    pub fn ledger_record(&self, s: &SimState, prev: Option<&LedgerRecord>) -> Result<LedgerRecord> {
        let rho = density(&s.ch.phi, &self.cfg.fluid);
        let nu = viscosity(&s.ch.phi, &self.cfg.fluid);
        let e_kin = kinetic_energy(&s.ns.u, &rho);
        let e_nloc = ch_energy(&s.ch.phi, &self.kernel, &self.cfg.potential)?;
        let e_total = e_kin + e_nloc;
        let dissipation = viscous_dissipation(&s.ns.u, &nu);
        let gmu = grad_norm_sq(&s.ch.mu);
        let residual = match prev {
            Some(p) => e_total - p.e_total + self.cfg.dt * (dissipation + gmu),
            None => 0.0,
        };
        Ok(LedgerRecord {
            t: s.ch.t,
            e_total,
            e_kin,
            e_nloc,
            dissipation,
            grad_mu_sq: gmu,
            residual,
            mass: s.ch.phi.mean(),
            sep_margin: separation_margin(&s.ch.phi),
            u_l2: norm_l2_vec(&s.ns.u),
        })
    }

    /// Advance one coupled step: phase first with the current velocity, then
    /// momentum with the fresh phase quantities.
    pub fn step(&self, s: &SimState) -> Result<SimState> {
        let ch_new = ch_step(
            &s.ch,
            &s.ns.u,
            &self.ch_params,
            &self.kernel,
            &self.cfg.potential,
        )
        .map_err(|e| e.at_step(s.step))?;
        let ns_new = ns_step(
            &s.ns,
            &ch_new.phi,
            &ch_new.mu,
            &self.cfg.fluid,
            self.cfg.dt,
        )
        .map_err(|e| e.at_step(s.step))?;
        Ok(SimState {
            ns: ns_new,
            ch: ch_new,
            step: s.step + 1,
        })
    }

    /// Drive the loop to t_end, invoking `on_record` after every ledger
    /// append (including the initial one) and `on_snapshot` at the snapshot
    /// cadence plus the final state. Either callback may abort the run.
    pub fn run_with(
        &self,
        start: SimState,
        mut on_record: impl FnMut(&SimState, &LedgerRecord) -> Result<()>,
        mut on_snapshot: impl FnMut(&Snapshot) -> Result<()>,
    ) -> Result<(SimState, EnergyLedger)> {
        let total_steps = self.cfg.n_steps();
        let mut ledger = EnergyLedger::default();
        let mut state = start;
        let first = self.ledger_record(&state, None)?;
        on_record(&state, &first)?;
        ledger.records.push(first);
        if self.cfg.output.snapshot_every != 0 && state.step == 0 {
            on_snapshot(&Snapshot::of(&state))?;
        }
        while state.step < total_steps {
            let next = self.step(&state)?;
            let rec = self.ledger_record(&next, ledger.last())?;
            on_record(&next, &rec)?;
            ledger.records.push(rec);
            let emit = self.cfg.output.snapshot_every != 0
                && (next.step % self.cfg.output.snapshot_every == 0 || next.step == total_steps);
            if emit {
                on_snapshot(&Snapshot::of(&next))?;
            }
            state = next;
        }
        Ok((state, ledger))
    }

    /// Convenience wrapper collecting snapshots in memory.
    pub fn run_collect(&self) -> Result<RunOutput> {
        let start = self.initial_state()?;
        let mut snapshots = Vec::new();
        let (final_state, ledger) = self.run_with(
            start,
            |_, _| Ok(()),
            |snap| {
                snapshots.push(snap.clone());
                Ok(())
            },
        )?;
        if snapshots.is_empty() {
            snapshots.push(Snapshot::of(&final_state));
        }
        Ok(RunOutput {
            final_state,
            ledger,
            snapshots,
        })
    }
}
