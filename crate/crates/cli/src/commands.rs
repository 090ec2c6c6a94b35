//! One function per CLI command. Each takes a parsed spec and returns a
//! JSON result plus whether the audit found non-uniqueness.

use std::fmt;

use eqsym::algebra::{classify, close_generators, GeneratorSet, Realization, SemigroupTable};
use eqsym::conv::{
    conv_completeness_check, group_like_operator, operator_equivariance_set, right_multiplications,
    semigroup_like_operator, symmetry_enumeration, GSpace, PairCheck,
};
use eqsym::converge::{
    annulus_grid, circle_grid, closure_residual, generator_convergence_audit,
    geometric_convergence_audit, hausdorff, spiral_orbit_demo, truncated_semigroup_cloud,
    GeneratorSequence, MatCloud,
};
use eqsym::linalg::{principal_angle, CVec, Mat, MatSubspace, C64};
use eqsym::nonuniq::{
    gated_layer_equivariance_check, network_symmetry_tuple_space, unlearnability_audit,
    FiniteLearnabilityInstance, GatedLayer, LinearNetwork, Sigma, EQUIVARIANCE_THRESHOLD,
};
use eqsym::rep::{
    block_matching, decompose, intertwiner_basis, pair_symmetry_space, predicted_pair_space,
    CoupledRep, IsotypicDecomposition, Rep,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{cvec, mat, num, nums, tagged, SeriesRow};
use crate::spec::{
    mats, CoupledRepSpec, ExperimentSpec, GSpaceSpec, GeneratorsJson, GridSpec, GroupSource,
    GroupSpec, LearnabilitySpec, NetworkSpec, SpaceAction, SpaceSpec, SpecFile, StepSource,
};

/// Completeness is decided against a fixed residual, independent of `--tol`.
const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Close,
    Decompose,
    Intertwiners,
    PairSpace,
    Nonuniq,
    ConvAudit,
    SemiconvAudit,
    NetAudit,
    Tradeoff,
    Converge,
    Spiral,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Close => "close",
            Command::Decompose => "decompose",
            Command::Intertwiners => "intertwiners",
            Command::PairSpace => "pair-space",
            Command::Nonuniq => "nonuniq",
            Command::ConvAudit => "conv-audit",
            Command::SemiconvAudit => "semiconv-audit",
            Command::NetAudit => "net-audit",
            Command::Tradeoff => "tradeoff",
            Command::Converge => "converge",
            Command::Spiral => "spiral",
        }
    }

    /// Library module whose errors this command surfaces.
    pub fn module(self) -> &'static str {
        match self {
            Command::Close => "algebra-core",
            Command::Decompose | Command::Intertwiners | Command::PairSpace => "rep-theory",
            Command::Nonuniq | Command::NetAudit | Command::Tradeoff => "nonuniqueness",
            Command::ConvAudit | Command::SemiconvAudit => "convolution",
            Command::Converge | Command::Spiral => "convergence-lab",
        }
    }

    pub fn emits_series(self) -> bool {
        matches!(self, Command::Converge | Command::Spiral)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandError {
    /// A library error, with the module it came from.
    Module {
        module: &'static str,
        message: String,
    },
    /// The spec kind does not fit the command.
    Usage(String),
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandError::Module { module, message } => write!(f, "[{module}] {message}"),
            CommandError::Usage(m) => write!(f, "usage: {m}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Value,
    pub nonunique: bool,
    pub series: Vec<SeriesRow>,
}

impl Outcome {
    fn plain(result: Value) -> Self {
        Outcome {
            result,
            nonunique: false,
            series: Vec::new(),
        }
    }
}

type Res<T> = Result<T, CommandError>;

pub fn run(cmd: Command, spec: &SpecFile, s: &Settings) -> Res<Outcome> {
    let lift = |e: eqsym::Error| CommandError::Module {
        module: cmd.module(),
        message: e.to_string(),
    };
    let wrong = || {
        CommandError::Usage(format!(
            "`{}` does not accept a `{}` spec",
            cmd.name(),
            spec.kind().name()
        ))
    };
    match (cmd, spec) {
        (Command::Close, SpecFile::Group(g)) => close(g, s).map_err(lift),
        (Command::Decompose, SpecFile::Group(g)) => decompose_group(g, s).map_err(lift),
        (Command::Decompose, SpecFile::CoupledRep(c)) => decompose_coupled(c, s).map_err(lift),
        (Command::Intertwiners, SpecFile::CoupledRep(c)) => intertwiners(c, s).map_err(lift),
        (Command::PairSpace, SpecFile::CoupledRep(c)) => pair_space(c, s).map_err(lift),
        (Command::Nonuniq, SpecFile::CoupledRep(c)) => nonuniq(c, s).map_err(lift),
        (Command::ConvAudit, SpecFile::Gspace(g)) => conv_audit(g, s).map_err(lift),
        (Command::SemiconvAudit, SpecFile::Group(g)) => semiconv_audit(g, s).map_err(lift),
        (Command::NetAudit, SpecFile::Network(n)) => net_audit(n, s).map_err(lift),
        (Command::Tradeoff, SpecFile::Learnability(l)) => tradeoff(l).map_err(lift),
        (Command::Converge, SpecFile::Experiment(ExperimentSpec::Spiral(_))) => Err(
            CommandError::Usage("spiral experiments run under the `spiral` command".into()),
        ),
        (Command::Converge, SpecFile::Experiment(e)) => converge(e, s).map_err(lift),
        (Command::Spiral, SpecFile::Experiment(ExperimentSpec::Spiral(e))) => {
            spiral(e).map_err(lift)
        }
        (Command::Spiral, SpecFile::Experiment(_)) => Err(CommandError::Usage(
            "`spiral` needs an experiment of type `spiral`".into(),
        )),
        _ => Err(wrong()),
    }
}

type R<T> = eqsym::Result<T>;

fn table_and_realization(g: &GroupSpec, s: &Settings) -> R<(SemigroupTable, Option<Realization>)> {
    let (mut table, real) = match &g.source {
        GroupSource::Table(t) => (SemigroupTable::from_table(t.clone())?, None),
        GroupSource::Generators(gens) => {
            let set = generator_set(gens).with_cap(s.cap).with_tol(s.tol);
            let (t, r) = close_generators(&set)?;
            (t, Some(r))
        }
    };
    if let Some(labels) = &g.labels {
        table = table.with_labels(labels.clone())?;
    }
    Ok((table, real))
}

fn generator_set(g: &GeneratorsJson) -> GeneratorSet {
    match g {
        GeneratorsJson::Permutations(ps) => {
            GeneratorSet::permutations(ps.iter().map(|p| p.0.clone()).collect())
        }
        GeneratorsJson::Matrices(ms) => GeneratorSet::matrices(mats(ms)),
    }
}

fn opt_usize(x: Option<usize>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn close(g: &GroupSpec, s: &Settings) -> R<Outcome> {
    let (table, real) = table_and_realization(g, s)?;
    let cls = classify(&table);
    let elements = match &real {
        Some(Realization::Permutation { images, .. }) => json!({ "permutations": images }),
        Some(Realization::Matrix { images, .. }) => {
            json!({ "matrices": images.iter().map(mat).collect::<Vec<_>>() })
        }
        None => Value::Null,
    };
    Ok(Outcome::plain(json!({
        "order": table.order(),
        "is_monoid": cls.is_monoid,
        "is_group": cls.is_group,
        "is_abelian": cls.is_abelian,
        "identity": opt_usize(cls.identity),
        "inverses": cls.inverses,
        "center": cls.center,
        "generating_set": table.generating_set(),
        "table": table.table(),
        "labels": table.labels(),
        "elements": elements,
        "homomorphism_defect": real.as_ref().map_or(Value::Null, |r| tagged(num(r.homomorphism_defect(&table)), s.tol)),
    })))
}

fn group_rep(g: &GroupSpec, s: &Settings) -> R<Rep> {
    match &g.source {
        GroupSource::Table(_) => Ok(Rep::regular(&table_and_realization(g, s)?.0)),
        GroupSource::Generators(gens) => {
            Rep::from_generators(generator_set(gens).with_cap(s.cap).with_tol(s.tol))
        }
    }
}

fn decomposition_json(dec: &IsotypicDecomposition, r: &Rep, tol: f64) -> Value {
    let blocks: Vec<Value> = dec
        .blocks
        .iter()
        .map(|b| {
            json!({
                "irrep_dim": b.irrep_dim,
                "multiplicity": b.multiplicity,
                "columns": [b.columns.start, b.columns.end],
            })
        })
        .collect();
    json!({
        "dim": r.dim(),
        "blocks": tagged(Value::Array(blocks), tol),
        "basis_change": mat(dec.q()),
        "defect": num(dec.defect(r)),
    })
}

fn decompose_group(g: &GroupSpec, s: &Settings) -> R<Outcome> {
    let r = group_rep(g, s)?;
    let dec = decompose(&r, s.seed, s.tol)?;
    Ok(Outcome::plain(
        json!({ "order": r.table().order(), "rep": decomposition_json(&dec, &r, s.tol) }),
    ))
}

fn coupled(c: &CoupledRepSpec, s: &Settings) -> R<CoupledRep> {
    let pairs: Vec<(Mat, Mat)> = c
        .pairs
        .iter()
        .map(|p| (p.u.0.clone(), p.v.0.clone()))
        .collect();
    CoupledRep::from_generator_pairs(&pairs, s.cap, s.tol)
}

fn decompose_coupled(c: &CoupledRepSpec, s: &Settings) -> R<Outcome> {
    let cr = coupled(c, s)?;
    let du = decompose(&cr.u, s.seed, s.tol)?;
    let dv = decompose(&cr.v, s.seed, s.tol)?;
    Ok(Outcome::plain(json!({
        "order": cr.table().order(),
        "u": decomposition_json(&du, &cr.u, s.tol),
        "v": decomposition_json(&dv, &cr.v, s.tol),
    })))
}

/// Rotates the phase so the first entry of largest modulus is real positive.
fn phase_fixed(m: &Mat) -> Mat {
    let mut best = C64::new(0.0, 0.0);
    for z in m.transpose().iter() {
        if z.norm() > best.norm() * (1.0 + 1e-12) {
            best = *z;
        }
    }
    if best.norm() == 0.0 {
        return m.clone();
    }
    m * (best.conj() / best.norm())
}

fn intertwiners(c: &CoupledRepSpec, s: &Settings) -> R<Outcome> {
    let cr = coupled(c, s)?;
    let space = intertwiner_basis(&cr, s.tol)?;
    let basis: Vec<Value> = space.basis().iter().map(|b| mat(&phase_fixed(b))).collect();
    Ok(Outcome::plain(json!({
        "order": cr.table().order(),
        "shape": [cr.v.dim(), cr.u.dim()],
        "dim": tagged(json!(space.dim()), s.tol),
        "basis": basis,
    })))
}

fn pair_space(c: &CoupledRepSpec, s: &Settings) -> R<Outcome> {
    let cr = coupled(c, s)?;
    let space = pair_symmetry_space(&cr, s.tol)?;
    let du = decompose(&cr.u, s.seed, s.tol)?;
    let dv = decompose(&cr.v, s.seed, s.tol)?;
    let pred = predicted_pair_space(&du, &dv, s.tol)?;
    let angle = principal_angle(&space, &pred)?;
    Ok(Outcome::plain(json!({
        "order": cr.table().order(),
        "dim": tagged(json!(space.dim()), s.tol),
        "predicted_dim": tagged(json!(pred.dim()), s.tol),
        "principal_angle": num(angle),
        "basis": space.basis().iter().map(mat).collect::<Vec<_>>(),
    })))
}

/// Irrep classes across U and V, labelled `W0, W1, …` in order of
/// dimension, ties broken by first appearance in U then V.
fn irrep_classes(
    du: &IsotypicDecomposition,
    dv: &IsotypicDecomposition,
    matched: &[Option<usize>],
) -> Vec<Value> {
    // (irrep_dim, u block, v block)
    let mut classes: Vec<(usize, Option<usize>, Option<usize>)> = du
        .blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            (
                b.irrep_dim,
                Some(k),
                matched.iter().position(|&m| m == Some(k)),
            )
        })
        .collect();
    for (l, b) in dv.blocks.iter().enumerate() {
        if matched[l].is_none() {
            classes.push((b.irrep_dim, None, Some(l)));
        }
    }
    classes.sort_by_key(|c| c.0);
    classes
        .iter()
        .enumerate()
        .map(|(i, &(dim, u, v))| {
            let presence = match (u, v) {
                (Some(_), Some(_)) => "both",
                (Some(_), None) => "only_in_u",
                _ => "only_in_v",
            };
            json!({
                "label": format!("W{i}"),
                "irrep_dim": dim,
                "multiplicity_u": u.map_or(0, |k| du.blocks[k].multiplicity),
                "multiplicity_v": v.map_or(0, |l| dv.blocks[l].multiplicity),
                "presence": presence,
            })
        })
        .collect()
}

fn nonuniq(c: &CoupledRepSpec, s: &Settings) -> R<Outcome> {
    let cr = coupled(c, s)?;
    let (nu, nv) = (cr.u.dim(), cr.v.dim());
    let pair = pair_symmetry_space(&cr, s.tol)?;
    let algebra = MatSubspace::span(nu + nv, nu + nv, &cr.coupled_image(), s.tol)?;
    let du = decompose(&cr.u, s.seed, s.tol)?;
    let dv = decompose(&cr.v, s.seed, s.tol)?;
    let matched = block_matching(&du, &dv, s.tol)?;
    let irreps = irrep_classes(&du, &dv, &matched);
    let degeneracy: Vec<Value> = irreps
        .iter()
        .filter(|c| c["presence"] != "both")
        .cloned()
        .collect();

    let nonunique = pair.dim() > algebra.dim();
    // the pair-space basis element farthest from the algebra span
    let witness = pair
        .basis()
        .iter()
        .map(|b| (algebra.residual(b), b))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|_| nonunique)
        .map(|(res, b)| {
            let w = b - algebra.project(b);
            let w = &w / C64::new(w.norm(), 0.0);
            json!({
                "t_u": mat(&w.view((0, 0), (nu, nu)).into_owned()),
                "t_v": mat(&w.view((nu, nu), (nv, nv)).into_owned()),
                "algebra_residual": tagged(num(res), s.tol),
            })
        })
        .unwrap_or(Value::Null);
    Ok(Outcome {
        result: json!({
            "order": cr.table().order(),
            "pair_space_dim": tagged(json!(pair.dim()), s.tol),
            "algebra_span_dim": tagged(json!(algebra.dim()), s.tol),
            "nonunique": tagged(json!(nonunique), s.tol),
            "irreps": irreps,
            "degeneracy_blocks": degeneracy,
            "witness": witness,
        }),
        nonunique,
        series: Vec::new(),
    })
}

fn gspace(table: &SemigroupTable, sp: &SpaceSpec) -> R<GSpace> {
    let action = match &sp.action {
        SpaceAction::Explicit(a) => a.clone(),
        SpaceAction::Regular(copies) => {
            let n = table.order();
            (0..n)
                .map(|g| {
                    (0..copies * n)
                        .map(|x| (x / n) * n + table.mul(g, x % n))
                        .collect()
                })
                .collect()
        }
    };
    GSpace::new(table.clone(), action, sp.mu.clone())
}

fn conv_audit(g: &GSpaceSpec, s: &Settings) -> R<Outcome> {
    let (table, _) = table_and_realization(&g.group, s)?;
    let (gx, gy) = (gspace(&table, &g.x)?, gspace(&table, &g.y)?);
    let comp = conv_completeness_check(&gx, &gy, s.tol)?;
    let search = symmetry_enumeration(&gx, &gy, s.tol, s.seed)?;
    let survivors: Vec<Value> = search
        .survivors
        .iter()
        .zip(&search.realized_by)
        .map(|((tx, ty), by)| json!({ "x": tx, "y": ty, "realized_by": opt_usize(*by) }))
        .collect();
    let nonunique = !search.equals_group_image;
    Ok(Outcome {
        result: json!({
            "order": table.order(),
            "x": { "size": gx.size(), "orbits": gx.orbits() },
            "y": { "size": gy.size(), "orbits": gy.orbits() },
            "completeness": {
                "complete": tagged(json!(comp.complete), COMPLETENESS_TOL),
                "residual": num(comp.residual),
                "equivariant_dim": tagged(json!(comp.equivariant_dim), s.tol),
                "conv_dim": tagged(json!(comp.conv_dim), s.tol),
            },
            "enumeration": {
                "survivor_count": search.survivors.len(),
                "group_image_count": search.group_image.len(),
                "equals_group_image": tagged(json!(search.equals_group_image), s.tol),
                "survivors": survivors,
            },
        }),
        nonunique,
        series: Vec::new(),
    })
}

fn pair_checks(checks: &[PairCheck], tol: f64) -> Value {
    let max = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    json!({
        "residuals": nums(&checks.iter().map(|c| c.residual).collect::<Vec<_>>()),
        "max_residual": num(max),
        "equivariant_under_all": tagged(json!(checks.iter().all(|c| c.survives)), tol),
    })
}

fn semiconv_audit(g: &GroupSpec, s: &Settings) -> R<Outcome> {
    let (table, _) = table_and_realization(g, s)?;
    let n = table.order();
    let ell = match &g.ell {
        Some(e) => e.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let lambda = g.lambda.as_deref();
    let cands: Vec<(Vec<usize>, Vec<usize>)> = right_multiplications(&table)
        .into_iter()
        .map(|r| (r.clone(), r))
        .collect();
    let semi = operator_equivariance_set(
        &semigroup_like_operator(&ell, &table, lambda)?,
        &cands,
        s.tol,
    )?;
    let group =
        operator_equivariance_set(&group_like_operator(&ell, &table, lambda)?, &cands, s.tol)?;
    Ok(Outcome::plain(json!({
        "order": table.order(),
        "ell": nums(&ell),
        "right_multiplications": cands.iter().map(|c| &c.0).collect::<Vec<_>>(),
        "semigroup_like": pair_checks(&semi, s.tol),
        "group_like": pair_checks(&group, s.tol),
    })))
}

fn net_audit(spec: &NetworkSpec, s: &Settings) -> R<Outcome> {
    let net = LinearNetwork::new(mats(&spec.layers))?;
    let sym = network_symmetry_tuple_space(&net, s.tol)?;
    let gated = match &spec.gated {
        None => Value::Null,
        Some(g) => {
            let sigma: Sigma = g.sigma.parse()?;
            let gates = g.gates.iter().map(|v| v.0.clone()).collect();
            let layer = GatedLayer::new(g.weight.0.clone(), gates, g.blocks.clone(), sigma)?;
            let din = g.weight.0.ncols();
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let samples: Vec<CVec> = (0..g.samples)
                .map(|_| CVec::from_fn(din, |_, _| C64::new(rng.random_range(-2.0..2.0), 0.0)))
                .collect();
            let res = gated_layer_equivariance_check(
                &layer,
                &g.t_in.0,
                &g.t_out.0,
                &samples,
                EQUIVARIANCE_THRESHOLD,
            )?;
            json!({
                "sigma": sigma.name(),
                "samples": g.samples,
                "residual": num(res),
                "equivariant": tagged(json!(res < EQUIVARIANCE_THRESHOLD), EQUIVARIANCE_THRESHOLD),
                "first_sample": samples.first().map_or(Value::Null, cvec),
            })
        }
    };
    Ok(Outcome::plain(json!({
        "dims": net.dims(),
        "tuple_space_dim": tagged(json!(sym.space.dim()), s.tol),
        "end_to_end_residual": num(sym.end_to_end_residual),
        "gated": gated,
    })))
}

fn tradeoff(l: &LearnabilitySpec) -> R<Outcome> {
    let inst = FiniteLearnabilityInstance {
        functions: l.functions.clone(),
        symmetries: l.symmetries.clone(),
        relation: l.relation.clone(),
        ansatz: l.ansatz.clone(),
        h: l.h.clone(),
    };
    let rep = unlearnability_audit(&inst)?;
    let name = |f: usize, g: usize| json!({ "function": inst.functions[f], "symmetry": inst.symmetries[g] });
    let nonunique = !rep.unlearnable.is_empty() || !rep.tradeoff_conflicts.is_empty();
    Ok(Outcome {
        result: json!({
            "subset_hypothesis": rep.subset_hypothesis,
            "equal_hypothesis": rep.equal_hypothesis,
            "unlearnable": rep.unlearnable.iter().map(|&(f, g)| name(f, g)).collect::<Vec<_>>(),
            "tradeoff_conflicts": rep.tradeoff_conflicts.iter().map(|&g| &inst.symmetries[g]).collect::<Vec<_>>(),
            "learnable_functions": inst.learnable_functions().iter().map(|&f| &inst.functions[f]).collect::<Vec<_>>(),
        }),
        nonunique,
        series: Vec::new(),
    })
}

fn rows<'a>(metric: &'static str, values: &'a [f64]) -> impl Iterator<Item = SeriesRow> + 'a {
    values
        .iter()
        .enumerate()
        .map(move |(step, &value)| SeriesRow {
            step,
            metric,
            value,
        })
}

fn converge(e: &ExperimentSpec, s: &Settings) -> R<Outcome> {
    match e {
        ExperimentSpec::Generators(g) => {
            let limit = mats(&g.limit);
            let gs = match &g.steps {
                StepSource::Explicit(steps) => {
                    GeneratorSequence::new(steps.iter().map(|t| mats(t)).collect(), limit)?
                }
                StepSource::Perturbed { perturbation, ns } => {
                    GeneratorSequence::perturbed(limit, &mats(perturbation), ns)?
                }
            };
            let audit = generator_convergence_audit(&gs, g.max_wordlen);
            let series = rows("generator_gap", &audit.generator_gap)
                .chain(rows("sup_deviation", &audit.sup))
                .collect();
            Ok(Outcome {
                result: json!({
                    "experiment": "generators",
                    "steps": gs.steps().len(),
                    "words": audit.words.len(),
                    "max_wordlen": g.max_wordlen,
                    "generator_gap": nums(&audit.generator_gap),
                    "sup_deviation": nums(&audit.sup),
                    "decays_tenfold": audit.decays,
                }),
                nonunique: false,
                series,
            })
        }
        ExperimentSpec::Clouds(c) => {
            let limit = MatCloud::new(mats(&c.limit), c.window)?;
            let seq = c
                .steps
                .iter()
                .map(|pts| MatCloud::new(mats(pts), c.window))
                .collect::<R<Vec<_>>>()?;
            let audit = geometric_convergence_audit(&seq, &limit)?;
            let haus = seq
                .iter()
                .map(|x| hausdorff(x, &limit))
                .collect::<R<Vec<_>>>()?;
            let series = rows("cond1_sup", &audit.cond1_sup)
                .chain(rows("cond2_residual", &audit.cond2_residual))
                .chain(rows("hausdorff", &haus))
                .collect();
            Ok(Outcome {
                result: json!({
                    "experiment": "clouds",
                    "window": num(c.window),
                    "cond1_sup": nums(&audit.cond1_sup),
                    "cond2_residual": nums(&audit.cond2_residual),
                    "hausdorff": nums(&haus),
                }),
                nonunique: false,
                series,
            })
        }
        ExperimentSpec::SemigroupCloud(c) => {
            let gens = mats(&c.generators);
            let mut sizes = Vec::new();
            let mut residuals = Vec::new();
            for len in 1..=c.max_wordlen {
                let cloud = truncated_semigroup_cloud(&gens, c.window, len)?;
                sizes.push(cloud.len() as f64);
                residuals.push(if cloud.is_empty() {
                    0.0
                } else {
                    closure_residual(&cloud)?
                });
            }
            let series = rows("points", &sizes)
                .chain(rows("closure_residual", &residuals))
                .collect();
            Ok(Outcome {
                result: json!({
                    "experiment": "semigroup_cloud",
                    "window": num(c.window),
                    "points": sizes.iter().map(|&x| x as usize).collect::<Vec<_>>(),
                    "closure_residual": tagged(nums(&residuals), s.tol),
                }),
                nonunique: false,
                series,
            })
        }
        ExperimentSpec::Spiral(_) => unreachable!("dispatched to spiral"),
    }
}

fn spiral(e: &crate::spec::SpiralExperiment) -> R<Outcome> {
    let grid = match e.grid {
        GridSpec::Annulus {
            radii,
            angles,
            r_min,
            r_max,
        } => annulus_grid(radii, angles, r_min, r_max),
        GridSpec::Circle { points, radius } => circle_grid(points, radius),
    };
    let rep = spiral_orbit_demo(e.eps, e.t_range, e.samples, &grid)?;
    Ok(Outcome {
        result: json!({
            "eps": num(e.eps),
            "samples": e.samples,
            "grid_points": grid.len(),
            "coverage": num(rep.coverage),
            "collapse": num(rep.collapse),
            "radial_average": num(rep.radial_average),
        }),
        nonunique: false,
        series: rows("distance", &rep.distances).collect(),
    })
}
