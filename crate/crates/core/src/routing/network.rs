use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crossbeam_channel::{bounded, Sender};
use parking_lot::RwLock;

use crate::ontomsg::{decode, encode, Envelope};

use super::trace::{Trace, TraceStep};

/// Sender address of requests submitted from outside the system. Steps to
/// or from it are not traced.
pub const USER: &str = "user";

pub type Reply = Result<Envelope, String>;

/// A request delivered to a module's inbox.
pub struct Incoming {
    pub env: Envelope,
    /// Final destination when a management module is asked to relay.
    pub target: Option<String>,
    pub reply: Sender<Reply>,
}

pub type Inbox = Sender<Incoming>;

#[derive(Clone)]
enum Route {
    Local(Inbox),
    Tcp(SocketAddr),
}

/// Address book plus trace. Every module sends through it.
pub struct Network {
    routes: RwLock<BTreeMap<String, Route>>,
    trace: Trace,
    timeout: Duration,
}

impl Network {
    pub fn new(trace: Trace, timeout: Duration) -> Self {
        Network {
            routes: RwLock::new(BTreeMap::new()),
            trace,
            timeout,
        }
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn bind_local(&self, address: &str, inbox: Inbox) {
        self.routes
            .write()
            .insert(address.to_string(), Route::Local(inbox));
    }

    pub fn bind_tcp(&self, address: &str, at: SocketAddr) {
        self.routes
            .write()
            .insert(address.to_string(), Route::Tcp(at));
    }

    /// Forgets every route.
    pub fn clear(&self) {
        self.routes.write().clear();
    }

    /// Makes `address` unreachable.
    pub fn unbind(&self, address: &str) {
        self.routes.write().remove(address);
    }

    fn record(&self, env: &Envelope) {
        if env.sender != USER && env.receiver != USER {
            self.trace.record(TraceStep::of(env));
        }
    }

    /// Sends `env` to its receiver and waits for the answer.
    pub fn request(&self, env: Envelope) -> Reply {
        let route = self.routes.read().get(&env.receiver).cloned();
        let peer = env.receiver.clone();
        let Some(route) = route else {
            return Err(format!("{peer} is unreachable"));
        };
        self.record(&env);
        let resp = match route {
            Route::Local(inbox) => deliver(&inbox, env, None, self.timeout),
            Route::Tcp(at) => tcp_request(at, &env, self.timeout),
        }
        .map_err(|e| format!("{peer}: {e}"))?;
        self.record(&resp);
        Ok(resp)
    }
}

/// Hands a request to an inbox and waits up to `timeout` for the reply.
pub fn deliver(inbox: &Inbox, env: Envelope, target: Option<String>, timeout: Duration) -> Reply {
    let (tx, rx) = bounded(1);
    inbox
        .send(Incoming {
            env,
            target,
            reply: tx,
        })
        .map_err(|_| "module has stopped".to_string())?;
    match rx.recv_timeout(timeout) {
        Ok(r) => r,
        Err(crossbeam_channel::RecvTimeoutError::Timeout) => {
            Err(format!("no answer within {} ms", timeout.as_millis()))
        }
        Err(crossbeam_channel::RecvTimeoutError::Disconnected) => {
            Err("module dropped the request".into())
        }
    }
}

const ERROR_PREFIX: &str = "ERR ";

fn tcp_request(at: SocketAddr, env: &Envelope, timeout: Duration) -> Reply {
    let mut stream = TcpStream::connect_timeout(&at, timeout).map_err(|e| e.to_string())?;
    stream
        .set_read_timeout(Some(timeout))
        .map_err(|e| e.to_string())?;
    stream.write_all(&encode(env)).map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(stream)
        .read_line(&mut line)
        .map_err(|e| e.to_string())?;
    if let Some(msg) = line.strip_prefix(ERROR_PREFIX) {
        return Err(msg.trim_end().to_string());
    }
    if line.is_empty() {
        return Err("connection closed without an answer".into());
    }
    decode(line.as_bytes()).map_err(|e| e.to_string())
}

/// Accepts wire-format requests for the modules of one node.
pub struct NodeServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl NodeServer {
    pub fn bind(
        at: SocketAddr,
        modules: BTreeMap<String, Inbox>,
        timeout: Duration,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind(at)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let modules = Arc::new(modules);
        let handle = thread::Builder::new()
            .name(format!("listen-{addr}"))
            .spawn(move || {
                while !flag.load(Ordering::SeqCst) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            let modules = modules.clone();
                            thread::spawn(move || serve(stream, &modules, timeout));
                        }
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            thread::sleep(Duration::from_millis(2))
                        }
                        Err(e) => log::warn!("accept on {addr}: {e}"),
                    }
                }
            })?;
        Ok(NodeServer {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for NodeServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, modules: &BTreeMap<String, Inbox>, timeout: Duration) {
    let _ = stream.set_nonblocking(false);
    let Ok(mut out) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while matches!(reader.read_line(&mut line), Ok(n) if n > 0) {
        let reply =
            decode(line.as_bytes())
                .map_err(|e| e.to_string())
                .and_then(|env| match modules.get(&env.receiver) {
                    Some(inbox) => deliver(inbox, env, None, timeout),
                    None => Err(format!("{} is not hosted here", env.receiver)),
                });
        let bytes = match reply {
            Ok(env) => encode(&env),
            Err(e) => format!("{ERROR_PREFIX}{}\n", e.replace('\n', " ")).into_bytes(),
        };
        if out.write_all(&bytes).is_err() {
            return;
        }
        line.clear();
    }
}
