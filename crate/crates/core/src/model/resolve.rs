use thiserror::Error;

use super::{qualified, ImplModule, ModuleKind, ModuleRef, RepositoryModel, SystemModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no module named `{0}`")]
    NotFound(String),
    #[error("`{name}` is ambiguous: matches {}", candidates.join(", "))]
    Ambiguous {
        name: String,
        candidates: Vec<String>,
    },
}

/// Where a reference appears: the enclosing package and, for references
/// written inside a node, that node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scope<'a> {
    pub package: Option<&'a str>,
    pub node: Option<&'a str>,
}

impl<'a> Scope<'a> {
    pub fn in_node(node: &'a str) -> Self {
        Scope {
            package: None,
            node: Some(node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleHandle {
    pub node: String,
    pub module: String,
    pub kind: ModuleKind,
    /// False when leading qualifier segments did not name this system or
    /// its package; the trailing `Node.Module` segments still matched.
    pub exact: bool,
}

impl ModuleHandle {
    pub fn address(&self) -> String {
        qualified(&self.node, &self.module)
    }
}

/// Resolves an architecture reference. Unqualified names are looked up in
/// the scope's node first and then system-wide, where more than one match is
/// ambiguous. Qualified names match on their last two segments.
pub fn resolve_ref(
    system: &SystemModel,
    r: &ModuleRef,
    scope: Scope<'_>,
) -> Result<ModuleHandle, ResolveError> {
    let segs = r.segments();
    if segs.iter().any(|s| s.is_empty()) {
        return Err(ResolveError::NotFound(r.to_string()));
    }
    let handle = |node: &str, module: &str, kind, exact| ModuleHandle {
        node: node.to_string(),
        module: module.to_string(),
        kind,
        exact,
    };

    if let [name] = segs.as_slice() {
        if let Some(node) = scope.node.and_then(|n| system.node(n)) {
            if let Some(kind) = node.module_kind(name) {
                return Ok(handle(&node.name, name, kind, true));
            }
        }
        let hits: Vec<_> = system
            .modules()
            .into_iter()
            .filter(|(_, _, m)| m == name)
            .collect();
        return match hits.as_slice() {
            [] => Err(ResolveError::NotFound(r.to_string())),
            [(node, kind, module)] => Ok(handle(node, module, *kind, true)),
            _ => Err(ResolveError::Ambiguous {
                name: r.to_string(),
                candidates: hits.iter().map(|(n, _, m)| qualified(n, m)).collect(),
            }),
        };
    }

    let n = segs.len();
    let (node_name, module_name) = (segs[n - 2], segs[n - 1]);
    let prefix = &segs[..n - 2];
    let exact = match prefix {
        [] => true,
        [one] => *one == system.name || Some(*one) == scope.package,
        [pkg, sys] => Some(*pkg) == scope.package && *sys == system.name,
        _ => false,
    };
    let hits: Vec<_> = system
        .nodes
        .iter()
        .filter(|node| node.name == node_name)
        .filter_map(|node| node.module_kind(module_name).map(|k| (node, k)))
        .collect();
    match hits.as_slice() {
        [] => Err(ResolveError::NotFound(r.to_string())),
        [(node, kind)] => Ok(handle(&node.name, module_name, *kind, exact)),
        _ => Err(ResolveError::Ambiguous {
            name: r.to_string(),
            candidates: hits
                .iter()
                .map(|(n, _)| qualified(&n.name, module_name))
                .collect(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplHandle {
    pub platform: String,
    pub module: String,
    pub uri: String,
    pub exact: bool,
}

struct ImplEntry<'a> {
    platform: &'a str,
    parent: Option<&'a str>,
    module: &'a ImplModule,
}

fn collect_impls<'a>(
    platform: &'a str,
    parent: Option<&'a str>,
    modules: &'a [ImplModule],
    out: &mut Vec<ImplEntry<'a>>,
) {
    for m in modules {
        out.push(ImplEntry {
            platform,
            parent,
            module: m,
        });
        collect_impls(platform, Some(m.name()), m.submodules(), out);
    }
}

/// Resolves an implementation reference: `Module`, `Platform.Module`, or
/// `Package.Platform.Module`. The segment before the module may also name
/// the enclosing composite module.
pub fn resolve_impl_ref(
    repo: &RepositoryModel,
    r: &ModuleRef,
    package: Option<&str>,
) -> Result<ImplHandle, ResolveError> {
    let segs = r.segments();
    if segs.iter().any(|s| s.is_empty()) {
        return Err(ResolveError::NotFound(r.to_string()));
    }
    let mut entries = Vec::new();
    for p in &repo.platforms {
        collect_impls(&p.name, None, &p.modules, &mut entries);
    }
    let n = segs.len();
    let name = segs[n - 1];
    let (hits, exact): (Vec<&ImplEntry>, bool) = if n == 1 {
        (
            entries.iter().filter(|e| e.module.name() == name).collect(),
            true,
        )
    } else {
        let owner = segs[n - 2];
        let prefix = &segs[..n - 2];
        let exact = match prefix {
            [] => true,
            [pkg] => Some(*pkg) == package,
            _ => false,
        };
        let hits = entries
            .iter()
            .filter(|e| e.module.name() == name)
            .filter(|e| e.platform == owner || e.parent == Some(owner))
            .collect();
        (hits, exact)
    };
    match hits.as_slice() {
        [] => Err(ResolveError::NotFound(r.to_string())),
        [e] => Ok(ImplHandle {
            platform: e.platform.to_string(),
            module: e.module.name().to_string(),
            uri: e.module.uri().to_string(),
            exact,
        }),
        _ => Err(ResolveError::Ambiguous {
            name: r.to_string(),
            candidates: hits
                .iter()
                .map(|e| format!("{}.{}", e.platform, e.module.name()))
                .collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::samples::{soleres_repository, soleres_system};

    #[test]
    fn qualified_reference_crosses_nodes() {
        let sys = soleres_system();
        let h = resolve_ref(
            &sys,
            &"Node_2.TradingModule_2_1".into(),
            Scope::in_node("Node_1"),
        )
        .unwrap();
        assert_eq!(h.node, "Node_2");
        assert_eq!(h.kind, ModuleKind::Trading);
        assert!(h.exact);
    }

    #[test]
    fn unqualified_reference_is_node_local() {
        let sys = soleres_system();
        let h = resolve_ref(&sys, &"TradingModule_1_1".into(), Scope::in_node("Node_1")).unwrap();
        assert_eq!(h.address(), "Node_1.TradingModule_1_1");
    }

    #[test]
    fn unknown_node_is_not_found() {
        let sys = soleres_system();
        let err = resolve_ref(&sys, &"Node_9.X".into(), Scope::default()).unwrap_err();
        assert_eq!(err, ResolveError::NotFound("Node_9.X".into()));
    }

    #[test]
    fn unqualified_name_shared_by_two_nodes_is_ambiguous() {
        let mut sys = soleres_system();
        sys.nodes[1].query_modules[0].name = "QueryModule_1_1".into();
        let err = resolve_ref(&sys, &"QueryModule_1_1".into(), Scope::default()).unwrap_err();
        assert!(matches!(err, ResolveError::Ambiguous { .. }));
        // but from inside a node the local one wins
        let h = resolve_ref(&sys, &"QueryModule_1_1".into(), Scope::in_node("Node_2")).unwrap();
        assert_eq!(h.node, "Node_2");
    }

    #[test]
    fn foreign_prefix_matches_leniently() {
        let sys = soleres_system();
        let scope = Scope {
            package: Some("SOLERES"),
            node: None,
        };
        let h = resolve_ref(&sys, &"SOLERES.KRS.Node_1.ServiceModule_1_1".into(), scope).unwrap();
        assert!(!h.exact);
        let h = resolve_ref(
            &sys,
            &"SOLERES.SOLERES_KRS.Node_1.ServiceModule_1_1".into(),
            scope,
        )
        .unwrap();
        assert!(h.exact);
    }

    #[test]
    fn implementation_refs() {
        let repo = soleres_repository();
        let h = resolve_impl_ref(
            &repo,
            &"ACG_Repository.Java_JADE.QueryModuleImpl".into(),
            Some("UAL_Repository"),
        )
        .unwrap();
        assert_eq!(h.uri, "http://.../acg/rep/TKRS/QueryModule.class");
        assert!(!h.exact);
        assert!(resolve_impl_ref(&repo, &"Java_JADE.Bogus".into(), None).is_err());
        assert!(
            resolve_impl_ref(&repo, &"TradingModuleImpl".into(), None)
                .unwrap()
                .exact
        );
    }
}
