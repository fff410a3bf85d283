//! The collaborative training protocol: a central server distributes the
//! global parameters, every client trains on its own data and uploads the
//! result with its sample count, and the server installs the
//! sample-count-weighted average as the next global model.
//!
//! Rounds are fully synchronous with full participation; clients that have
//! no data declare a skip instead of uploading. A `LocalOnly` mode trains
//! every client in isolation on the same epoch budget for baseline
//! comparisons.

use serde::Serialize;

use crate::data::ClientDataset;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Sample, Seq2seqModel};
use crate::numerics::ParamValues;

pub type ClientId = u32;

/// One federated participant: its chronological train/test split and its
/// local model (which keeps the locally trained state between rounds).
#[derive(Debug, Clone)]
pub struct ClientNode {
    pub id: ClientId,
    pub region: String,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub model: Seq2seqModel,
    /// Local epochs per round.
    pub local_epochs: usize,
}

impl ClientNode {
    pub fn new(
        id: ClientId,
        train: ClientDataset,
        test: ClientDataset,
        model: Seq2seqModel,
        local_epochs: usize,
    ) -> Self {
        ClientNode {
            id,
            region: train.region.clone(),
            train: train.samples,
            test: test.samples,
            model,
            local_epochs,
        }
    }

    /// Training-set size `m`; the weight this client carries in
    /// aggregation.
    pub fn m(&self) -> usize {
        self.train.len()
    }
}

/// A client's contribution to one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: ClientId,
    pub round: u32,
    pub params: ParamValues,
    pub m: usize,
}

/// Result of asking one client to train for a round.
#[derive(Debug, Clone)]
pub enum LocalOutcome {
    Update {
        update: ClientUpdate,
        /// Mean per-sample loss of the final local epoch (or the plain
        /// evaluation loss when `epochs == 0`).
        train_mse: f64,
    },
    Skipped { client_id: ClientId, reason: String },
}

/// Loads the global parameters into the client's model, runs `epochs`
/// training epochs, and returns the resulting parameters plus the sample
/// count. The local model retains the trained state. A client without
/// training data skips the round with a `no-data` status.
pub fn local_train(
    client: &mut ClientNode,
    global: &ParamValues,
    round: u32,
    epochs: usize,
    lr: f64,
    batch: usize,
) -> Result<LocalOutcome> {
    if client.train.is_empty() {
        return Ok(LocalOutcome::Skipped {
            client_id: client.id,
            reason: "no-data".to_string(),
        });
    }
    client.model.load_values(global)?;
    let mut train_mse = f64::NAN;
    for _ in 0..epochs {
        train_mse = client.model.train_epoch(&client.train, batch, lr)?;
    }
    if epochs == 0 {
        train_mse = client.model.evaluate(&client.train)?;
    }
    Ok(LocalOutcome::Update {
        update: ClientUpdate {
            client_id: client.id,
            round,
            params: client.model.values(),
            m: client.m(),
        },
        train_mse,
    })
}

/// Sample-count-weighted mean of the updates: every parameter component
/// becomes `sum_i (m_i / sum_j m_j) * w_i`, accumulated left to right over
/// ascending client id so the result is independent of arrival order.
///
/// The sum is evaluated in the anchored form `w_0 + sum p_i * (w_i - w_0)`,
/// which is the same weighted mean (the weights sum to 1) but returns
/// identical inputs exactly: a naive `sum p_i * w_i` drifts by an ulp
/// whenever the `p_i` are not exact binary fractions.
pub fn fedavg(updates: &[ClientUpdate]) -> Result<ParamValues> {
    if updates.is_empty() {
        return Err(Error::protocol("fedavg: no updates to aggregate"));
    }
    let round = updates[0].round;
    if updates.iter().any(|u| u.round != round) {
        return Err(Error::protocol("fedavg: updates from different rounds"));
    }
    if updates.iter().any(|u| u.m == 0) {
        return Err(Error::protocol("fedavg: update with zero sample count"));
    }

    let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
    sorted.sort_by_key(|u| u.client_id);
    for pair in sorted.windows(2) {
        if pair[0].client_id == pair[1].client_id {
            return Err(Error::protocol(format!(
                "fedavg: duplicate update from client {}",
                pair[0].client_id
            )));
        }
    }

    let layout = sorted[0].params.layout();
    for u in &sorted[1..] {
        if u.params.layout() != layout {
            return Err(Error::protocol(format!(
                "fedavg: client {} parameter manifest does not match client {}",
                u.client_id, sorted[0].client_id
            )));
        }
    }

    let total: f64 = sorted.iter().map(|u| u.m as f64).sum();
    let anchor = &sorted[0].params;
    let mut out = anchor.clone();
    for u in &sorted[1..] {
        let p = u.m as f64 / total;
        for (((_, acc), (_, t)), (_, a)) in out
            .entries
            .iter_mut()
            .zip(&u.params.entries)
            .zip(&anchor.entries)
        {
            for ((o, &ti), &ai) in acc.data_mut().iter_mut().zip(t.data()).zip(a.data()) {
                *o += p * (ti - ai);
            }
        }
    }
    Ok(out)
}

/// Central coordinator state.
#[derive(Debug, Clone)]
pub struct ServerState {
    pub global: ParamValues,
    pub round: u32,
    registered: Vec<ClientId>,
    pub strategy: Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Aggregation {
    FedAvg,
}

impl ServerState {
    /// Server whose initial global model is a fresh seeded initialization
    /// of `config`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let init = Seq2seqModel::new(config, seed)?;
        Ok(ServerState::with_global(init.values()))
    }

    pub fn with_global(global: ParamValues) -> Self {
        ServerState {
            global,
            round: 0,
            registered: Vec::new(),
            strategy: Aggregation::FedAvg,
        }
    }

    /// Registers a client id. A newcomer simply receives the current
    /// global parameters on its first round; training history never
    /// restarts.
    pub fn register_client(&mut self, id: ClientId) -> Result<()> {
        if self.registered.contains(&id) {
            return Err(Error::config(format!("client {id} is already registered")));
        }
        self.registered.push(id);
        Ok(())
    }

    pub fn registered(&self) -> &[ClientId] {
        &self.registered
    }

    pub fn is_registered(&self, id: ClientId) -> bool {
        self.registered.contains(&id)
    }
}

/// Per-client metrics within a [`RoundReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ClientRoundMetrics {
    pub client_id: ClientId,
    pub m: usize,
    /// Aggregation weight `p_i = m_i / sum m`.
    pub weight: f64,
    pub train_mse: f64,
    /// New global model evaluated on this client's held-out split
    /// (`NaN` when the client has no test samples).
    pub test_mse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedClient {
    pub client_id: ClientId,
    pub reason: String,
}

/// Outcome of one synchronous round.
#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: u32,
    pub clients: Vec<ClientRoundMetrics>,
    pub skipped: Vec<SkippedClient>,
    /// `sum_i p_i * test_mse_i` over the participants.
    pub global_test_mse: f64,
}

/// Round hyperparameters shared by every client.
#[derive(Debug, Clone, Copy)]
pub struct TrainOpts {
    pub lr: f64,
    pub batch: usize,
}

/// One synchronous round: distribute the global parameters, train every
/// registered client locally (concurrently — clients share no state),
/// aggregate, install the new global model, and evaluate it on every
/// participant's test split.
///
/// If every client skips, the round aborts and the server (including its
/// round counter) is left untouched.
pub fn run_round(
    server: &mut ServerState,
    clients: &mut [ClientNode],
    opts: &TrainOpts,
) -> Result<RoundReport> {
    for c in clients.iter() {
        if !server.is_registered(c.id) {
            return Err(Error::protocol(format!(
                "client {} participates without registration",
                c.id
            )));
        }
    }
    let round = server.round + 1;
    let global = &server.global;

    let outcomes: Vec<Result<LocalOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = clients
            .iter_mut()
            .map(|client| {
                scope.spawn(move || {
                    local_train(client, global, round, client.local_epochs, opts.lr, opts.batch)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("local training must not panic"))
            .collect()
    });

    let mut updates = Vec::new();
    let mut train_mses = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome? {
            LocalOutcome::Update { update, train_mse } => {
                updates.push(update);
                train_mses.push(train_mse);
            }
            LocalOutcome::Skipped { client_id, reason } => {
                skipped.push(SkippedClient { client_id, reason });
            }
        }
    }
    if updates.is_empty() {
        return Err(Error::protocol(format!(
            "round {round} aborted: every client skipped"
        )));
    }

    server.global = fedavg(&updates)?;
    server.round = round;

    let total: f64 = updates.iter().map(|u| u.m as f64).sum();
    let mut metrics = Vec::with_capacity(updates.len());
    let mut global_test_mse = 0.0;
    for (update, train_mse) in updates.iter().zip(train_mses) {
        let client = clients
            .iter()
            .find(|c| c.id == update.client_id)
            .expect("update comes from a participating client");
        // Score the new global model without disturbing the client's
        // locally trained state.
        let test_mse = if client.test.is_empty() {
            f64::NAN
        } else {
            let mut scorer = client.model.clone();
            scorer.load_values(&server.global)?;
            scorer.evaluate(&client.test)?
        };
        let weight = update.m as f64 / total;
        global_test_mse += weight * test_mse;
        metrics.push(ClientRoundMetrics {
            client_id: update.client_id,
            m: update.m,
            weight,
            train_mse,
            test_mse,
        });
    }

    Ok(RoundReport {
        round,
        clients: metrics,
        skipped,
        global_test_mse,
    })
}

/// Whether `run_federation` aggregates or trains every client in
/// isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMode {
    Federated,
    /// No aggregation: each client trains on its own model for the same
    /// total epoch budget, reported on the same per-round grid.
    LocalOnly,
}

/// Optional server-side pre-training on one voluntary client's data before
/// the first round.
#[derive(Debug, Clone, Copy)]
pub struct PretrainSpec {
    pub client_id: ClientId,
    pub epochs: usize,
}

/// Federation-run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rounds: u32,
    pub lr: f64,
    pub batch: usize,
    pub mode: TrainingMode,
    pub pretrain: Option<PretrainSpec>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !self.lr.is_finite() || self.lr < 0.0 {
            bad.push(format!("lr: must be finite and non-negative, got {}", self.lr));
        }
        if self.batch == 0 {
            bad.push("batch: must be >= 1".to_string());
        }
        if self.mode == TrainingMode::LocalOnly && self.pretrain.is_some() {
            bad.push("pretrain: not applicable in local-only mode".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(bad.join("; ")))
        }
    }
}

/// Runs `rounds` rounds (federated) or the equivalent epoch budget in
/// isolation (local-only), returning one report per round.
///
/// In both modes every client starts from the server's initial global
/// parameters, so a single-client federation and a local-only run of the
/// same budget produce identical parameter trajectories.
pub fn run_federation(
    server: &mut ServerState,
    clients: &mut [ClientNode],
    config: &RunConfig,
) -> Result<Vec<RoundReport>> {
    config.validate()?;
    for c in clients.iter() {
        if !server.is_registered(c.id) {
            server.register_client(c.id)?;
        }
    }

    match config.mode {
        TrainingMode::Federated => {
            if let Some(pre) = config.pretrain {
                let global = server.global.clone();
                let client = clients
                    .iter_mut()
                    .find(|c| c.id == pre.client_id)
                    .ok_or_else(|| {
                        Error::config(format!(
                            "pretrain_client: {} is not a participant",
                            pre.client_id
                        ))
                    })?;
                let outcome =
                    local_train(client, &global, 0, pre.epochs, config.lr, config.batch)?;
                if let LocalOutcome::Update { update, .. } = outcome {
                    server.global = update.params;
                }
            }
            let opts = TrainOpts {
                lr: config.lr,
                batch: config.batch,
            };
            let mut reports = Vec::with_capacity(config.rounds as usize);
            for _ in 0..config.rounds {
                reports.push(run_round(server, clients, &opts)?);
            }
            Ok(reports)
        }
        TrainingMode::LocalOnly => run_local_only(server, clients, config),
    }
}

/// The isolation baseline: every client loads the initial global model
/// once (the round-0 broadcast) and then trains alone; reports land on the
/// same per-round grid as the federated run.
fn run_local_only(
    server: &ServerState,
    clients: &mut [ClientNode],
    config: &RunConfig,
) -> Result<Vec<RoundReport>> {
    for client in clients.iter_mut() {
        if !client.train.is_empty() {
            client.model.load_values(&server.global)?;
        }
    }

    let mut reports = Vec::with_capacity(config.rounds as usize);
    for r in 1..=config.rounds {
        type Row = (ClientId, usize, f64, f64);
        let results: Vec<Result<Option<Row>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = clients
                .iter_mut()
                .map(|client| {
                    scope.spawn(move || {
                        if client.train.is_empty() {
                            return Ok(None);
                        }
                        let mut train_mse = f64::NAN;
                        for _ in 0..client.local_epochs {
                            train_mse =
                                client.model.train_epoch(&client.train, config.batch, config.lr)?;
                        }
                        if client.local_epochs == 0 {
                            train_mse = client.model.evaluate(&client.train)?;
                        }
                        let test_mse = if client.test.is_empty() {
                            f64::NAN
                        } else {
                            client.model.evaluate(&client.test)?
                        };
                        Ok(Some((client.id, client.m(), train_mse, test_mse)))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("local training must not panic"))
                .collect()
        });

        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for (client, result) in clients.iter().zip(results) {
            match result? {
                Some(row) => rows.push(row),
                None => skipped.push(SkippedClient {
                    client_id: client.id,
                    reason: "no-data".to_string(),
                }),
            }
        }
        if rows.is_empty() {
            return Err(Error::protocol(format!(
                "round {r} aborted: every client skipped"
            )));
        }
        let total: f64 = rows.iter().map(|(_, m, _, _)| *m as f64).sum();
        let mut metrics = Vec::new();
        let mut global_test_mse = 0.0;
        for (client_id, m, train_mse, test_mse) in rows {
            let weight = m as f64 / total;
            global_test_mse += weight * test_mse;
            metrics.push(ClientRoundMetrics {
                client_id,
                m,
                weight,
                train_mse,
                test_mse,
            });
        }
        reports.push(RoundReport {
            round: r,
            clients: metrics,
            skipped,
            global_test_mse,
        });
    }
    Ok(reports)
}
