use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::{
    qualified, resolve_impl_ref, resolve_ref, ConfigurationModel, ImplModule, ModuleKind,
    ModuleRef, RepositoryModel, ResolveError, Scope, SystemModel,
};

/// Identifier of a structural rule. `as_str` gives the stable id used in
/// reports and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    NodesNonempty,
    SystemNeedsTrader,
    SystemNeedsProcessor,
    NameEmpty,
    NodeNameUnique,
    ModuleNameUnique,
    ServiceModuleRequired,
    ManagementModuleRequired,
    QueryModuleRequired,
    IpSyntax,
    PortRange,
    TraderLookupRequired,
    TraderRegisterRequired,
    FederationSelf,
    FederationLinkDisabled,
    DanglingRef,
    AmbiguousRef,
    PlatformNonempty,
    PlatformNameUnique,
    CompositeNonempty,
    ContainmentAcyclic,
    RepoModuleUnique,
    PlatformMismatch,
    SingleContainer,
    UriEmpty,
    UnresolvedRef,
    DuplicateMapping,
    UnmappedModule,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::NodesNonempty => "nodes-nonempty",
            Rule::SystemNeedsTrader => "system-needs-trader",
            Rule::SystemNeedsProcessor => "system-needs-processor",
            Rule::NameEmpty => "name-empty",
            Rule::NodeNameUnique => "node-name-unique",
            Rule::ModuleNameUnique => "module-name-unique",
            Rule::ServiceModuleRequired => "service-module-required",
            Rule::ManagementModuleRequired => "management-module-required",
            Rule::QueryModuleRequired => "query-module-required",
            Rule::IpSyntax => "ip-syntax",
            Rule::PortRange => "port-range",
            Rule::TraderLookupRequired => "trader-lookup-required",
            Rule::TraderRegisterRequired => "trader-register-required",
            Rule::FederationSelf => "federation-self",
            Rule::FederationLinkDisabled => "federation-link-disabled",
            Rule::DanglingRef => "dangling-ref",
            Rule::AmbiguousRef => "ambiguous-ref",
            Rule::PlatformNonempty => "platform-nonempty",
            Rule::PlatformNameUnique => "platform-name-unique",
            Rule::CompositeNonempty => "composite-nonempty",
            Rule::ContainmentAcyclic => "containment-acyclic",
            Rule::RepoModuleUnique => "repo-module-unique",
            Rule::PlatformMismatch => "platform-mismatch",
            Rule::SingleContainer => "single-container",
            Rule::UriEmpty => "uri-empty",
            Rule::UnresolvedRef => "unresolved-ref",
            Rule::DuplicateMapping => "duplicate-mapping",
            Rule::UnmappedModule => "unmapped-module",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub rule: Rule,
    /// The offending element, e.g. `Node_1.QueryModule_1_1`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.path, self.message)
    }
}

/// Sorted, duplicate-free list of violations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_unsorted(v: Vec<Violation>) -> Self {
        let set: BTreeSet<Violation> = v.into_iter().collect();
        ValidationReport {
            violations: set.into_iter().collect(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn rules(&self) -> BTreeSet<&'static str> {
        self.violations.iter().map(|v| v.rule.as_str()).collect()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.violations.extend(other.violations);
        Self::from_unsorted(self.violations)
    }
}

#[derive(Default)]
struct Sink(Vec<Violation>);

impl Sink {
    fn push(&mut self, rule: Rule, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            rule,
            path: path.into(),
            message: message.into(),
        });
    }
}

fn is_dotted_quad(ip: &str) -> bool {
    let parts: Vec<&str> = ip.split('.').collect();
    parts.len() == 4
        && parts.iter().all(|p| {
            !p.is_empty()
                && p.len() <= 3
                && p.bytes().all(|b| b.is_ascii_digit())
                && p.parse::<u16>().is_ok_and(|v| v <= 255)
        })
}

fn check_binding(
    sys: &SystemModel,
    node: &str,
    owner: &str,
    what: &str,
    r: &ModuleRef,
    sink: &mut Sink,
) -> Option<String> {
    let path = qualified(node, owner);
    match resolve_ref(sys, r, Scope::in_node(node)) {
        Ok(h) if h.kind == ModuleKind::Trading => Some(h.address()),
        Ok(h) => {
            sink.push(
                Rule::DanglingRef,
                path,
                format!(
                    "{what} `{r}` resolves to {} module {}, not a trading module",
                    h.kind,
                    h.address()
                ),
            );
            None
        }
        Err(ResolveError::NotFound(_)) => {
            sink.push(
                Rule::DanglingRef,
                path,
                format!("{what} `{r}` does not resolve"),
            );
            None
        }
        Err(e @ ResolveError::Ambiguous { .. }) => {
            sink.push(Rule::AmbiguousRef, path, format!("{what}: {e}"));
            None
        }
    }
}

/// Checks every structural constraint of an architecture model.
pub fn validate_system(sys: &SystemModel) -> ValidationReport {
    let mut sink = Sink::default();
    if sys.name.is_empty() {
        sink.push(Rule::NameEmpty, "<system>", "system name is empty");
    }
    if sys.nodes.is_empty() {
        sink.push(
            Rule::NodesNonempty,
            &sys.name,
            "a system needs at least one node",
        );
    }
    if !sys.nodes.is_empty() {
        if sys.nodes.iter().all(|n| n.trading_modules.is_empty()) {
            sink.push(
                Rule::SystemNeedsTrader,
                &sys.name,
                "no node contains a trading module",
            );
        }
        if sys.nodes.iter().all(|n| n.processing_modules.is_empty()) {
            sink.push(
                Rule::SystemNeedsProcessor,
                &sys.name,
                "no node contains a processing module",
            );
        }
    }

    let mut node_names: HashMap<&str, usize> = HashMap::new();
    for n in &sys.nodes {
        *node_names.entry(n.name.as_str()).or_default() += 1;
    }
    for (name, count) in node_names {
        if count > 1 {
            sink.push(
                Rule::NodeNameUnique,
                name,
                format!("node name used {count} times"),
            );
        }
    }

    for node in &sys.nodes {
        let np = node.name.as_str();
        if np.is_empty() {
            sink.push(Rule::NameEmpty, &sys.name, "node name is empty");
        }
        if !is_dotted_quad(&node.ip) {
            sink.push(
                Rule::IpSyntax,
                np,
                format!("`{}` is not a dotted-quad address", node.ip),
            );
        }
        for (label, port) in [("port", node.port), ("dbport", node.dbport)] {
            if !(1..=65535).contains(&port) {
                sink.push(
                    Rule::PortRange,
                    np,
                    format!("{label} {port} outside 1..65535"),
                );
            }
        }
        if node.service_modules.is_empty() {
            sink.push(
                Rule::ServiceModuleRequired,
                np,
                "node has no service module",
            );
        }
        if node.management_modules.is_empty() {
            sink.push(
                Rule::ManagementModuleRequired,
                np,
                "node has no management module",
            );
        }
        if node.query_modules.is_empty() {
            sink.push(Rule::QueryModuleRequired, np, "node has no query module");
        }

        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, m) in node.modules() {
            *seen.entry(m).or_default() += 1;
            if m.is_empty() {
                sink.push(Rule::NameEmpty, np, "module name is empty");
            }
        }
        for (m, count) in seen {
            if count > 1 {
                sink.push(
                    Rule::ModuleNameUnique,
                    qualified(np, m),
                    format!("module name used {count} times in node"),
                );
            }
        }

        for q in &node.query_modules {
            check_binding(
                sys,
                np,
                &q.name,
                "usesLookupInterface",
                &q.uses_lookup,
                &mut sink,
            );
        }
        for p in &node.processing_modules {
            check_binding(
                sys,
                np,
                &p.name,
                "usesRegisterInterface",
                &p.uses_register,
                &mut sink,
            );
        }
        for t in &node.trading_modules {
            let tp = qualified(np, &t.name);
            if !t.lookup {
                sink.push(
                    Rule::TraderLookupRequired,
                    &tp,
                    "the Lookup interface is mandatory",
                );
            }
            if !t.register {
                sink.push(
                    Rule::TraderRegisterRequired,
                    &tp,
                    "the Register interface is mandatory",
                );
            }
            for target in &t.federated_with {
                let resolved =
                    check_binding(sys, np, &t.name, "isFederatedWith", target, &mut sink);
                // The source side holds whether or not the target resolves.
                if !t.link {
                    let to = resolved.clone().unwrap_or_else(|| target.to_string());
                    sink.push(
                        Rule::FederationLinkDisabled,
                        &format!("{tp}->{to}"),
                        format!("{tp} does not implement Link"),
                    );
                }
                let Some(addr) = resolved else {
                    continue;
                };
                if addr == tp {
                    sink.push(
                        Rule::FederationSelf,
                        &tp,
                        "a trader cannot federate with itself",
                    );
                    continue;
                }
                let (tn, tm) = addr.split_once('.').expect("qualified address");
                let other_link = sys
                    .node(tn)
                    .and_then(|n| n.trading_module(tm))
                    .is_some_and(|o| o.link);
                let edge = format!("{tp}->{addr}");
                if !other_link {
                    sink.push(
                        Rule::FederationLinkDisabled,
                        &edge,
                        format!("{addr} does not implement Link"),
                    );
                }
            }
        }
    }
    ValidationReport::from_unsorted(sink.0)
}

fn walk_impls<'a>(
    platform: &str,
    parent: Option<&'a str>,
    ancestors: &mut Vec<&'a str>,
    modules: &'a [ImplModule],
    names: &mut BTreeMap<String, usize>,
    sink: &mut Sink,
) {
    for m in modules {
        let path = format!("{platform}.{}", m.name());
        if m.name().is_empty() {
            sink.push(
                Rule::NameEmpty,
                platform,
                "implementation module name is empty",
            );
        }
        if m.uri().is_empty() {
            sink.push(Rule::UriEmpty, &path, "implementation module has no uri");
        }
        if let Some(p) = m.platform_ref() {
            if p != platform {
                sink.push(
                    Rule::PlatformMismatch,
                    &path,
                    format!("declares platform `{p}` but sits in `{platform}`"),
                );
            }
        }
        match (m.super_ref(), parent) {
            (Some(s), Some(actual)) if s != actual => {
                sink.push(
                    Rule::SingleContainer,
                    &path,
                    format!("declares container `{s}` but is contained by `{actual}`"),
                );
            }
            (Some(s), None) => {
                sink.push(
                    Rule::SingleContainer,
                    &path,
                    format!("declares container `{s}` but is not nested in it"),
                );
            }
            _ => {}
        }
        if ancestors.contains(&m.name()) {
            sink.push(Rule::ContainmentAcyclic, &path, "module contains itself");
        } else {
            *names.entry(m.name().to_string()).or_default() += 1;
        }
        if let ImplModule::Composite(c) = m {
            if c.submodules.is_empty() {
                sink.push(
                    Rule::CompositeNonempty,
                    &path,
                    "composite module has no submodules",
                );
            }
            ancestors.push(m.name());
            walk_impls(
                platform,
                Some(m.name()),
                ancestors,
                &c.submodules,
                names,
                sink,
            );
            ancestors.pop();
        }
    }
}

/// Checks platform non-emptiness, containment and naming constraints.
pub fn validate_repository(repo: &RepositoryModel) -> ValidationReport {
    let mut sink = Sink::default();
    let mut platform_names: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &repo.platforms {
        *platform_names.entry(&p.name).or_default() += 1;
        if p.modules.is_empty() {
            sink.push(Rule::PlatformNonempty, &p.name, "platform has no modules");
        }
        let mut names = BTreeMap::new();
        walk_impls(
            &p.name,
            None,
            &mut Vec::new(),
            &p.modules,
            &mut names,
            &mut sink,
        );
        for (name, count) in names {
            if count > 1 {
                sink.push(
                    Rule::RepoModuleUnique,
                    format!("{}.{name}", p.name),
                    format!("module name used {count} times"),
                );
            }
        }
    }
    for (name, count) in platform_names {
        if count > 1 {
            sink.push(
                Rule::PlatformNameUnique,
                name,
                format!("platform name used {count} times"),
            );
        }
    }
    ValidationReport::from_unsorted(sink.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigurationReport {
    pub report: ValidationReport,
    /// True iff every reference resolves and every architecture module is
    /// bound by exactly one statement.
    pub deployable: bool,
}

/// Checks a configuration's statements against the two models it binds.
pub fn validate_configuration(
    cfg: &ConfigurationModel,
    arch: &SystemModel,
    repo: &RepositoryModel,
) -> ConfigurationReport {
    let mut sink = Sink::default();
    let mut mapped: BTreeMap<String, usize> = BTreeMap::new();
    for (i, st) in cfg.statements.iter().enumerate() {
        let path = format!("statement[{}]", i + 1);
        match resolve_ref(arch, &st.arch_module, Scope::default()) {
            Ok(h) => *mapped.entry(h.address()).or_default() += 1,
            Err(e) => sink.push(Rule::UnresolvedRef, &path, format!("hasTKRSModule: {e}")),
        }
        if let Err(e) = resolve_impl_ref(repo, &st.impl_module, None) {
            sink.push(
                Rule::UnresolvedRef,
                &path,
                format!("hasImplementationRepositoryModule: {e}"),
            );
        }
    }
    for (node, _, module) in arch.modules() {
        let addr = qualified(node, module);
        match mapped.get(&addr) {
            None => sink.push(
                Rule::UnmappedModule,
                &addr,
                "no statement binds this module",
            ),
            Some(&c) if c > 1 => sink.push(
                Rule::DuplicateMapping,
                &addr,
                format!("bound by {c} statements"),
            ),
            Some(_) => {}
        }
    }
    let report = ValidationReport::from_unsorted(sink.0);
    let deployable = report.is_clean();
    ConfigurationReport { report, deployable }
}
