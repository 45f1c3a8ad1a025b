use std::collections::{BTreeMap, BTreeSet};
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::unbounded;
use thiserror::Error;

use crate::model::{qualified, resolve_ref, ModuleKind, ModuleRef, Scope, SystemModel};
use crate::ontomsg::{
    Body, Envelope, Mode, Offer, PolicySeq, QueryForm, RegisterAction, RegisterPredicate, Speech,
};
use crate::store::{Document, Level, Repository, SharedRepository};
use crate::trader::{InterfaceFlags, Trader};

use super::modules::{self, Catalog, Processing};
use super::network::{deliver, Inbox, Network, NodeServer, USER};
use super::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transport {
    #[default]
    InProcess,
    /// Every message crosses a loopback socket of the receiving node. With
    /// `ephemeral_ports` nodes bind a free port instead of their own.
    Tcp { ephemeral_ports: bool },
}

#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub transport: Transport,
    /// Per-conversation wait before a silent peer is reported.
    pub timeout: Duration,
    /// Indexed paths per processing module address.
    pub indexed: BTreeMap<String, Vec<String>>,
    pub federate_always: bool,
    pub trader_mode: Mode,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            transport: Transport::InProcess,
            timeout: Duration::from_secs(5),
            indexed: BTreeMap::new(),
            federate_always: false,
            trader_mode: Mode::Default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("{module}: cannot bind `{reference}`: {detail}")]
    Binding {
        module: String,
        reference: String,
        detail: String,
    },
    #[error("{node}: {detail}")]
    Listen { node: String, detail: String },
    #[error("no module `{0}`")]
    UnknownModule(String),
    #[error("{0} has no management module")]
    NoManagement(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("registration refused: {0}")]
    Refused(String),
}

/// A running system: one reactor per module, wired by its model's bindings.
pub struct System {
    model: SystemModel,
    net: Arc<Network>,
    traders: BTreeMap<String, Arc<Trader>>,
    processing: BTreeMap<String, SharedRepository>,
    inboxes: BTreeMap<String, Inbox>,
    servers: Vec<NodeServer>,
    threads: Vec<JoinHandle<()>>,
    next_cid: AtomicUsize,
}

fn bind(
    system: &SystemModel,
    node: &str,
    module: &str,
    r: &ModuleRef,
) -> Result<String, RuntimeError> {
    let err = |detail: String| RuntimeError::Binding {
        module: qualified(node, module),
        reference: r.to_string(),
        detail,
    };
    let h = resolve_ref(system, r, Scope::in_node(node)).map_err(|e| err(e.to_string()))?;
    if h.kind != ModuleKind::Trading {
        return Err(err(format!("{} is a {} module", h.address(), h.kind)));
    }
    Ok(h.address())
}

impl System {
    pub fn start(model: &SystemModel, config: RuntimeConfig) -> Result<System, RuntimeError> {
        let net = Arc::new(Network::new(Trace::new(), config.timeout));
        let mut inboxes = BTreeMap::new();
        let mut receivers = BTreeMap::new();
        for (node, _, module) in model.modules() {
            let (tx, rx) = unbounded();
            let addr = qualified(node, module);
            inboxes.insert(addr.clone(), tx);
            receivers.insert(addr, rx);
        }

        let mut traders = BTreeMap::new();
        for node in &model.nodes {
            for t in &node.trading_modules {
                let addr = qualified(&node.name, &t.name);
                let trader = Trader::new(addr.clone(), InterfaceFlags::from(t))
                    .with_federate_always(config.federate_always)
                    .with_mode(config.trader_mode);
                traders.insert(addr, Arc::new(trader));
            }
        }
        for node in &model.nodes {
            for t in &node.trading_modules {
                let addr = qualified(&node.name, &t.name);
                for r in &t.federated_with {
                    let other = bind(model, &node.name, &t.name, r)?;
                    traders[&addr]
                        .add_federation_link(&other, traders[&other].flags().link)
                        .map_err(|e| RuntimeError::Binding {
                            module: addr.clone(),
                            reference: r.to_string(),
                            detail: e.to_string(),
                        })?;
                }
            }
        }

        let mut catalog = Catalog::default();
        for node in &model.nodes {
            for p in &node.processing_modules {
                let addr = qualified(&node.name, &p.name);
                catalog
                    .indexed
                    .extend(config.indexed.get(&addr).into_iter().flatten().cloned());
                catalog.processing.push(addr);
            }
        }

        let mut threads = Vec::new();
        let mut processing = BTreeMap::new();
        for node in &model.nodes {
            let n = &node.name;
            let mut take = |m: &str| {
                receivers
                    .remove(&qualified(n, m))
                    .expect("one inbox per module")
            };
            for s in &node.service_modules {
                threads.push(modules::service(qualified(n, &s.name), take(&s.name)));
            }
            let local_queries: Vec<String> = node
                .query_modules
                .iter()
                .map(|q| qualified(n, &q.name))
                .collect();
            for m in &node.management_modules {
                threads.push(modules::management(
                    qualified(n, &m.name),
                    net.clone(),
                    local_queries.clone(),
                    take(&m.name),
                ));
            }
            for q in &node.query_modules {
                let trader = bind(model, n, &q.name, &q.uses_lookup)?;
                threads.push(modules::query(
                    qualified(n, &q.name),
                    net.clone(),
                    trader,
                    catalog.clone(),
                    take(&q.name),
                ));
            }
            for t in &node.trading_modules {
                let addr = qualified(n, &t.name);
                threads.push(modules::trading(
                    traders[&addr].clone(),
                    net.clone(),
                    take(&t.name),
                ));
            }
            for p in &node.processing_modules {
                let addr = qualified(n, &p.name);
                let repo = Repository::new(Level::Meta, addr.clone(), '#').shared();
                processing.insert(addr.clone(), repo.clone());
                let state = Processing {
                    trader: bind(model, n, &p.name, &p.uses_register)?,
                    ambient: p.ambient.clone(),
                    indexed: config.indexed.get(&addr).cloned().unwrap_or_default(),
                    repo,
                    records: BTreeMap::new(),
                    me: addr,
                };
                threads.push(modules::processing(state, net.clone(), take(&p.name)));
            }
        }

        let mut system = System {
            model: model.clone(),
            net,
            traders,
            processing,
            inboxes,
            servers: Vec::new(),
            threads,
            next_cid: AtomicUsize::new(0),
        };
        match config.transport {
            Transport::InProcess => {
                for (addr, inbox) in &system.inboxes {
                    system.net.bind_local(addr, inbox.clone());
                }
            }
            Transport::Tcp { ephemeral_ports } => system.listen(ephemeral_ports)?,
        }
        Ok(system)
    }

    fn listen(&mut self, ephemeral: bool) -> Result<(), RuntimeError> {
        let mut taken = BTreeSet::new();
        for node in &self.model.nodes {
            let err = |detail: String| RuntimeError::Listen {
                node: node.name.clone(),
                detail,
            };
            let port = if ephemeral {
                0
            } else {
                u16::try_from(node.port)
                    .map_err(|_| err(format!("port {} is out of range", node.port)))?
            };
            if port != 0 && !taken.insert(port) {
                return Err(err(format!("port {port} is already used by another node")));
            }
            let hosted: BTreeMap<String, Inbox> = node
                .modules()
                .into_iter()
                .map(|(_, m)| {
                    let addr = qualified(&node.name, m);
                    let inbox = self.inboxes[&addr].clone();
                    (addr, inbox)
                })
                .collect();
            let at = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
            let server = NodeServer::bind(at, hosted.clone(), self.net.timeout())
                .map_err(|e| err(format!("cannot listen on {at}: {e}")))?;
            for addr in hosted.keys() {
                self.net.bind_tcp(addr, server.local_addr());
            }
            log::info!("{} listening on {}", node.name, server.local_addr());
            self.servers.push(server);
        }
        Ok(())
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    /// Addresses of every running module.
    pub fn modules(&self) -> Vec<String> {
        self.inboxes.keys().cloned().collect()
    }

    pub fn trace(&self) -> &Trace {
        self.net.trace()
    }

    pub fn trader(&self, address: &str) -> Option<&Arc<Trader>> {
        self.traders.get(address)
    }

    pub fn processing_repository(&self, address: &str) -> Option<&SharedRepository> {
        self.processing.get(address)
    }

    /// Makes a module unreachable for every other module.
    pub fn isolate(&self, address: &str) {
        self.net.unbind(address);
    }

    fn fresh_cid(&self) -> String {
        format!("c{}", self.next_cid.fetch_add(1, Ordering::SeqCst) + 1)
    }

    fn management_of(&self, node: &str) -> Result<String, RuntimeError> {
        let spec = self
            .model
            .node(node)
            .ok_or_else(|| RuntimeError::UnknownModule(node.to_string()))?;
        let m = spec
            .management_modules
            .first()
            .ok_or_else(|| RuntimeError::NoManagement(node.to_string()))?;
        Ok(qualified(node, &m.name))
    }

    /// Hands `body` to the node's management module, which routes queries
    /// to a local query module and relays other requests to `target`.
    pub fn submit(
        &self,
        node: &str,
        body: Body,
        target: Option<&str>,
    ) -> Result<Envelope, RuntimeError> {
        let mgmt = self.management_of(node)?;
        if let Some(t) = target {
            if !self.inboxes.contains_key(t) {
                return Err(RuntimeError::UnknownModule(t.to_string()));
            }
        }
        let env = Envelope::new(self.fresh_cid(), USER, mgmt.clone(), body);
        // Nested conversations each get the full timeout.
        let patience = self.net.timeout() * 4;
        deliver(
            &self.inboxes[&mgmt],
            env,
            target.map(str::to_string),
            patience,
        )
        .map_err(RuntimeError::Transport)
    }

    pub fn query(
        &self,
        node: &str,
        form: QueryForm,
        policies: Option<PolicySeq>,
    ) -> Result<Envelope, RuntimeError> {
        self.submit(node, Body::query(form, policies), None)
    }

    /// Sends a Register request to a processing module through the
    /// management module of the processing module's node.
    pub fn register(&self, processing: &str, body: Body) -> Result<Envelope, RuntimeError> {
        let node = processing.split_once('.').map_or(processing, |(n, _)| n);
        self.submit(node, body, Some(processing))
    }

    /// Sends an Admin request to a trader through a management module of
    /// the trader's node.
    pub fn admin(&self, trader: &str, body: Body) -> Result<Envelope, RuntimeError> {
        let node = trader.split_once('.').map_or(trader, |(n, _)| n);
        self.submit(node, body, Some(trader))
    }

    /// Registers documents at a processing module through the Register
    /// path, so its trader receives their projections. Returns local ids.
    pub fn seed(&self, processing: &str, docs: Vec<Document>) -> Result<Vec<String>, RuntimeError> {
        let mut ids = Vec::with_capacity(docs.len());
        for doc in docs {
            let resp = self.register(
                processing,
                Body::register(RegisterAction::Export, None, Some(Offer::inline(doc))),
            )?;
            match resp.body {
                Body::Register(Speech::Predicate {
                    predicate: RegisterPredicate::ExportedOffer,
                    concepts,
                    ..
                }) => ids.push(concepts.offer_id.unwrap_or_default()),
                other => {
                    let msg = other.returned_message().unwrap_or_default().to_string();
                    return Err(RuntimeError::Refused(format!("{}: {msg}", other.name())));
                }
            }
        }
        Ok(ids)
    }

    /// Stops every module and waits for their threads.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.servers.clear();
        self.net.clear();
        self.inboxes.clear();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for System {
    fn drop(&mut self) {
        self.stop();
    }
}
