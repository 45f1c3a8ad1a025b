use std::collections::BTreeMap;

use ontotrader_core::model::{
    resolve_impl_ref, resolve_ref, ConfigurationModel, ImplHandle, ModuleKind, ModuleRef,
    RepositoryModel, Scope, SystemModel,
};

use super::{Code, Diagnostic, PackageModel, SourceSpan};

/// One statement with both ends resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub node: String,
    pub module: String,
    pub kind: ModuleKind,
    pub implementation: ImplHandle,
}

/// The packages of one deployment, with every configuration reference
/// resolved. Every package in the set is visible to every other; imports
/// must still name packages of the set and must not form cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedSet {
    pub packages: Vec<String>,
    pub system: Option<SystemModel>,
    /// Package declaring the TKRS.
    pub system_package: Option<String>,
    /// Platforms of every package, in package order.
    pub repository: RepositoryModel,
    /// Statements of every package, in package order.
    pub configuration: ConfigurationModel,
    /// One per statement, in statement order.
    pub bindings: Vec<Binding>,
    pub warnings: Vec<Diagnostic>,
}

struct Diags<'a> {
    pkgs: &'a [PackageModel],
    out: Vec<Diagnostic>,
}

impl Diags<'_> {
    fn error(&mut self, pkg: usize, code: Code, span: SourceSpan, msg: impl Into<String>) {
        self.out
            .push(Diagnostic::error(code, span, msg).in_file(self.pkgs[pkg].spans.file.as_deref()));
    }

    fn warning(&mut self, pkg: usize, span: SourceSpan, msg: impl Into<String>) {
        self.out.push(
            Diagnostic::warning(Code::QualifierMismatch, span, msg)
                .in_file(self.pkgs[pkg].spans.file.as_deref()),
        );
    }
}

/// Links a set of parsed packages. Errors come back with any warnings,
/// sorted by file and position.
pub fn link(pkgs: &[PackageModel]) -> Result<LinkedSet, Vec<Diagnostic>> {
    let mut d = Diags {
        pkgs,
        out: Vec::new(),
    };

    let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, p) in pkgs.iter().enumerate() {
        if let Some(first) = by_name.insert(&p.name, i) {
            by_name.insert(&pkgs[first].name, first);
            d.error(
                i,
                Code::DuplicateName,
                p.spans.package,
                format!("package `{}` is declared twice", p.name),
            );
        }
    }
    check_imports(pkgs, &by_name, &mut d);

    let mut system: Option<(usize, &SystemModel)> = None;
    for (i, p) in pkgs.iter().enumerate() {
        let Some(sys) = &p.tkrs else { continue };
        match system {
            None => system = Some((i, sys)),
            Some((first, other)) => d.error(
                i,
                Code::DuplicateName,
                p.spans.tkrs.unwrap_or(p.spans.package),
                format!(
                    "a deployment has one TKRS; `{}` is already declared in package `{}`",
                    other.name, pkgs[first].name
                ),
            ),
        }
    }
    let repos: Vec<(usize, &RepositoryModel)> = pkgs
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.repository.as_ref().map(|r| (i, r)))
        .collect();

    let mut configuration = ConfigurationModel::default();
    let mut bindings = Vec::new();
    // (package, qualifier, expected) -> (first span, count)
    let mut loose: BTreeMap<(usize, String, String), (SourceSpan, usize)> = BTreeMap::new();
    for (pi, p) in pkgs.iter().enumerate() {
        let Some(statements) = &p.configuration else {
            continue;
        };
        if configuration.package_name.is_empty() {
            configuration.package_name = p.name.clone();
            configuration.imports = p.imports.clone();
        }
        for (si, st) in statements.iter().enumerate() {
            configuration.statements.push(st.clone());
            let (arch_span, impl_span) = p.spans.statements.get(si).copied().unwrap_or_default();
            let mut unresolved: Vec<(SourceSpan, String)> = Vec::new();

            let arch = match system {
                None => Err("no TKRS in the linked packages".to_string()),
                Some((si, sys)) => {
                    let scope = Scope {
                        package: Some(&pkgs[si].name),
                        node: None,
                    };
                    resolve_ref(sys, &st.arch_module, scope).map_err(|e| e.to_string())
                }
            };
            match &arch {
                Ok(h) if !h.exact => {
                    let (si, sys) = system.expect("resolved against a system");
                    let expected = format!("package `{}` or TKRS `{}`", pkgs[si].name, sys.name);
                    let e = loose
                        .entry((pi, qualifier(&st.arch_module), expected))
                        .or_insert((arch_span, 0));
                    e.1 += 1;
                }
                Ok(_) => {}
                Err(e) => unresolved.push((
                    arch_span,
                    format!("hasTKRSModule `{}`: {e}", st.arch_module),
                )),
            }

            let imp = resolve_implementation(pkgs, &repos, &st.impl_module);
            match &imp {
                Ok((owner, h)) if !h.exact => {
                    let expected = format!("package `{}`", pkgs[*owner].name);
                    let e = loose
                        .entry((pi, qualifier(&st.impl_module), expected))
                        .or_insert((impl_span, 0));
                    e.1 += 1;
                }
                Ok(_) => {}
                Err(e) => unresolved.push((
                    impl_span,
                    format!(
                        "hasImplementationRepositoryModule `{}`: {e}",
                        st.impl_module
                    ),
                )),
            }

            match (arch, imp, unresolved.first()) {
                (Ok(h), Ok((_, implementation)), None) => bindings.push(Binding {
                    node: h.node,
                    module: h.module,
                    kind: h.kind,
                    implementation,
                }),
                (_, _, Some((span, _))) => {
                    let msg = unresolved
                        .iter()
                        .map(|(_, m)| m.as_str())
                        .collect::<Vec<_>>()
                        .join("; ");
                    d.error(pi, Code::UnresolvedReference, *span, msg);
                }
                _ => unreachable!("an unresolved end is always reported"),
            }
        }
    }
    for ((pi, prefix, expected), (span, n)) in loose {
        let refs = if n == 1 {
            "1 reference".to_string()
        } else {
            format!("{n} references")
        };
        d.warning(pi, span, format!("qualifier `{prefix}` does not name {expected}; {refs} resolved by their trailing segments"));
    }

    let mut diags = d.out;
    diags.sort();
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    let mut repository = RepositoryModel::default();
    for (_, r) in &repos {
        repository.platforms.extend(r.platforms.iter().cloned());
    }
    Ok(LinkedSet {
        packages: pkgs.iter().map(|p| p.name.clone()).collect(),
        system: system.map(|(_, s)| s.clone()),
        system_package: system.map(|(i, _)| pkgs[i].name.clone()),
        repository,
        configuration,
        bindings,
        warnings: diags,
    })
}

/// Leading segments of a reference, before the two that name the target.
fn qualifier(r: &ModuleRef) -> String {
    let segs = r.segments();
    segs[..segs.len().saturating_sub(2)].join(".")
}

fn resolve_implementation(
    pkgs: &[PackageModel],
    repos: &[(usize, &RepositoryModel)],
    r: &ModuleRef,
) -> Result<(usize, ImplHandle), String> {
    if repos.is_empty() {
        return Err("no ImplementationRepository in the linked packages".into());
    }
    let mut hits = Vec::new();
    let mut first_error = None;
    for (i, repo) in repos {
        match resolve_impl_ref(repo, r, Some(&pkgs[*i].name)) {
            Ok(h) => hits.push((*i, h)),
            Err(e) => {
                first_error.get_or_insert(e.to_string());
            }
        }
    }
    match hits.len() {
        0 => Err(first_error.unwrap_or_default()),
        1 => Ok(hits.remove(0)),
        _ => {
            let found: Vec<String> = hits
                .iter()
                .map(|(i, h)| format!("{}.{}.{}", pkgs[*i].name, h.platform, h.module))
                .collect();
            Err(format!("`{r}` is ambiguous: matches {}", found.join(", ")))
        }
    }
}

fn check_imports(pkgs: &[PackageModel], by_name: &BTreeMap<&str, usize>, d: &mut Diags<'_>) {
    // edges[i] = (target, import index)
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); pkgs.len()];
    for (i, p) in pkgs.iter().enumerate() {
        for (k, import) in p.imports.iter().enumerate() {
            let segs: Vec<&str> = import.trim_end_matches(".*").split('.').collect();
            let target = (1..=segs.len())
                .rev()
                .find_map(|n| by_name.get(segs[..n].join(".").as_str()).copied());
            let span = p.spans.imports.get(k).copied().unwrap_or(p.spans.package);
            match target {
                Some(t) => edges[i].push((t, k)),
                None => d.error(
                    i,
                    Code::UnresolvedReference,
                    span,
                    format!("import `{import}` names no package of the set"),
                ),
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(
        at: usize,
        edges: &[Vec<(usize, usize)>],
        marks: &mut [Mark],
        path: &mut Vec<usize>,
        found: &mut Vec<(usize, usize, Vec<usize>)>,
    ) {
        marks[at] = Mark::Active;
        path.push(at);
        for &(to, k) in &edges[at] {
            match marks[to] {
                Mark::New => visit(to, edges, marks, path, found),
                Mark::Active => {
                    let start = path
                        .iter()
                        .position(|p| *p == to)
                        .expect("active nodes are on the path");
                    found.push((at, k, path[start..].to_vec()));
                }
                Mark::Done => {}
            }
        }
        path.pop();
        marks[at] = Mark::Done;
    }
    let mut marks = vec![Mark::New; pkgs.len()];
    let mut found = Vec::new();
    for i in 0..pkgs.len() {
        if marks[i] == Mark::New {
            visit(i, &edges, &mut marks, &mut Vec::new(), &mut found);
        }
    }
    for (at, k, cycle) in found {
        let mut names: Vec<&str> = cycle.iter().map(|i| pkgs[*i].name.as_str()).collect();
        names.push(names[0]);
        let span = pkgs[at]
            .spans
            .imports
            .get(k)
            .copied()
            .unwrap_or(pkgs[at].spans.package);
        d.error(
            at,
            Code::ImportCycle,
            span,
            format!("import cycle: {}", names.join(" -> ")),
        );
    }
}
