//! The three metamodels: system architecture, implementation repository and
//! configuration (the binding between the two).
//!
//! Everything here is a plain value. Models are built by the configuration
//! language parser or programmatically, and checked by the `validate_*`
//! functions, which report violations as data rather than failing.

mod resolve;
pub mod samples;
mod validate;

use std::fmt;

pub use resolve::{resolve_impl_ref, resolve_ref, ImplHandle, ModuleHandle, ResolveError, Scope};
pub use validate::{
    validate_configuration, validate_repository, validate_system, ConfigurationReport, Rule,
    ValidationReport, Violation,
};

/// A possibly qualified reference to a module: `Name`, `Node.Name`, or a
/// longer dotted path whose trailing segments name the module.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModuleRef(String);

impl ModuleRef {
    pub fn new(s: impl Into<String>) -> Self {
        ModuleRef(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> Vec<&str> {
        self.0.split('.').collect()
    }
}

impl fmt::Display for ModuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModuleRef {
    fn from(s: &str) -> Self {
        ModuleRef(s.to_string())
    }
}

/// The five kinds of architecture module a node can host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModuleKind {
    Service,
    Management,
    Query,
    Trading,
    Processing,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 5] = [
        ModuleKind::Service,
        ModuleKind::Management,
        ModuleKind::Query,
        ModuleKind::Trading,
        ModuleKind::Processing,
    ];

    /// Keyword used in the configuration language and class name in scaffolds.
    pub fn keyword(self) -> &'static str {
        match self {
            ModuleKind::Service => "ServiceModule",
            ModuleKind::Management => "ManagementModule",
            ModuleKind::Query => "QueryModule",
            ModuleKind::Trading => "TradingModule",
            ModuleKind::Processing => "ProcessingModule",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModuleKind::Service => "service",
            ModuleKind::Management => "management",
            ModuleKind::Query => "query",
            ModuleKind::Trading => "trading",
            ModuleKind::Processing => "processing",
        }
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    /// Dotted-quad IPv4 address, checked syntactically only.
    pub ip: String,
    pub port: u32,
    pub dbport: u32,
    pub service_modules: Vec<ServiceModuleSpec>,
    pub management_modules: Vec<ManagementModuleSpec>,
    pub query_modules: Vec<QueryModuleSpec>,
    pub trading_modules: Vec<TradingModuleSpec>,
    pub processing_modules: Vec<ProcessingModuleSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceModuleSpec {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManagementModuleSpec {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryModuleSpec {
    pub name: String,
    pub uses_lookup: ModuleRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingModuleSpec {
    pub name: String,
    pub lookup: bool,
    pub register: bool,
    pub admin: bool,
    pub link: bool,
    pub proxy: bool,
    pub federated_with: Vec<ModuleRef>,
}

impl TradingModuleSpec {
    /// A trader with the mandatory interfaces and nothing else.
    pub fn new(name: impl Into<String>) -> Self {
        TradingModuleSpec {
            name: name.into(),
            lookup: true,
            register: true,
            admin: false,
            link: false,
            proxy: false,
            federated_with: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessingModuleSpec {
    pub name: String,
    pub ambient: String,
    pub uses_register: ModuleRef,
}

impl NodeSpec {
    /// An empty node; module lists must be filled before it validates.
    pub fn new(name: impl Into<String>, ip: impl Into<String>, port: u32, dbport: u32) -> Self {
        NodeSpec {
            name: name.into(),
            ip: ip.into(),
            port,
            dbport,
            service_modules: Vec::new(),
            management_modules: Vec::new(),
            query_modules: Vec::new(),
            trading_modules: Vec::new(),
            processing_modules: Vec::new(),
        }
    }

    /// Every module of the node as `(kind, name)`, grouped by kind in
    /// [`ModuleKind::ALL`] order and in declaration order within a kind.
    pub fn modules(&self) -> Vec<(ModuleKind, &str)> {
        let mut out = Vec::new();
        out.extend(
            self.service_modules
                .iter()
                .map(|m| (ModuleKind::Service, m.name.as_str())),
        );
        out.extend(
            self.management_modules
                .iter()
                .map(|m| (ModuleKind::Management, m.name.as_str())),
        );
        out.extend(
            self.query_modules
                .iter()
                .map(|m| (ModuleKind::Query, m.name.as_str())),
        );
        out.extend(
            self.trading_modules
                .iter()
                .map(|m| (ModuleKind::Trading, m.name.as_str())),
        );
        out.extend(
            self.processing_modules
                .iter()
                .map(|m| (ModuleKind::Processing, m.name.as_str())),
        );
        out
    }

    pub fn module_kind(&self, name: &str) -> Option<ModuleKind> {
        self.modules()
            .into_iter()
            .find(|(_, n)| *n == name)
            .map(|(k, _)| k)
    }

    pub fn trading_module(&self, name: &str) -> Option<&TradingModuleSpec> {
        self.trading_modules.iter().find(|t| t.name == name)
    }
}

impl SystemModel {
    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Every module in the system as `(node, kind, module)`.
    pub fn modules(&self) -> Vec<(&str, ModuleKind, &str)> {
        self.nodes
            .iter()
            .flat_map(|n| {
                n.modules()
                    .into_iter()
                    .map(move |(k, m)| (n.name.as_str(), k, m))
            })
            .collect()
    }
}

/// `Node.Module` address used throughout the runtime.
pub fn qualified(node: &str, module: &str) -> String {
    format!("{node}.{module}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RepositoryModel {
    pub platforms: Vec<Platform>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Platform {
    pub name: String,
    pub modules: Vec<ImplModule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImplModule {
    Simple(SimpleImpl),
    Composite(CompositeImpl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleImpl {
    pub name: String,
    pub uri: String,
    /// Platform named explicitly by the source (`hasPlatform`), if any.
    pub platform_ref: Option<String>,
    /// Container named explicitly by the source (`hasSuperModule`), if any.
    pub super_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeImpl {
    pub name: String,
    pub uri: String,
    pub submodules: Vec<ImplModule>,
    pub platform_ref: Option<String>,
    pub super_ref: Option<String>,
}

impl ImplModule {
    pub fn simple(name: impl Into<String>, uri: impl Into<String>) -> Self {
        ImplModule::Simple(SimpleImpl {
            name: name.into(),
            uri: uri.into(),
            platform_ref: None,
            super_ref: None,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            ImplModule::Simple(m) => &m.name,
            ImplModule::Composite(m) => &m.name,
        }
    }

    pub fn uri(&self) -> &str {
        match self {
            ImplModule::Simple(m) => &m.uri,
            ImplModule::Composite(m) => &m.uri,
        }
    }

    pub fn platform_ref(&self) -> Option<&str> {
        match self {
            ImplModule::Simple(m) => m.platform_ref.as_deref(),
            ImplModule::Composite(m) => m.platform_ref.as_deref(),
        }
    }

    pub fn super_ref(&self) -> Option<&str> {
        match self {
            ImplModule::Simple(m) => m.super_ref.as_deref(),
            ImplModule::Composite(m) => m.super_ref.as_deref(),
        }
    }

    pub fn submodules(&self) -> &[ImplModule] {
        match self {
            ImplModule::Simple(_) => &[],
            ImplModule::Composite(m) => &m.submodules,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigurationModel {
    pub package_name: String,
    pub imports: Vec<String>,
    pub statements: Vec<Statement>,
}

/// Binds one architecture module to one implementation module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub arch_module: ModuleRef,
    pub impl_module: ModuleRef,
}
