use crate::dynamics::Backend;

/// Registry entry for one continuum field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub order: u8,
    /// Spatially uniform (collective) observable.
    pub collective: bool,
    pub backends: &'static [Backend],
    pub precursor: &'static str,
}

const ALL: &[Backend] = &[Backend::Nve, Backend::Nh, Backend::Apr];
const NH: &[Backend] = &[Backend::Nh];
const APR: &[Backend] = &[Backend::Apr];

macro_rules! entry {
    ($name:literal, $order:literal, $coll:literal, $b:expr, $pre:literal) => {
        CatalogEntry { name: $name, order: $order, collective: $coll, backends: $b, precursor: $pre }
    };
}

/// Every field the assembler can emit. `@s` entries carry the thermostat
/// weight `s` used for virtual-time derivatives.
pub const CATALOG: &[CatalogEntry] = &[
    entry!("n", 0, false, ALL, "Σ (1/N) δ"),
    entry!("rho", 0, false, ALL, "Σ m δ"),
    entry!("rho_v", 1, false, ALL, "Σ m v δ"),
    entry!("v", 1, false, ALL, "ρv / ρ"),
    entry!("eps_K", 0, false, ALL, "Σ ½m|v|² δ"),
    entry!("eps_V", 0, false, ALL, "Σ (½Σ_j V_jk + V^e_k) δ"),
    entry!("f_e", 1, false, ALL, "−Σ ∇V^e_k δ"),
    entry!("T_K", 2, false, ALL, "−Σ m u⊗u δ"),
    entry!("T_V", 2, false, ALL, "Σ_bonds (V'/|x|) x⊗x b"),
    entry!("T", 2, false, ALL, "T_K + T_V"),
    entry!("q_K", 1, false, ALL, "Σ ½m|u|² u δ"),
    entry!("q_V", 1, false, ALL, "−Σ_bonds (V'/|x|) x (x·ū) b"),
    entry!("q_T", 1, false, ALL, "Σ (½Σ_j V_jk + V^e_k) u δ"),
    entry!("sigma_eps_0", 0, false, ALL, "Σ ∇V^e_k·v_k δ"),
    entry!("sigma_rho", 0, false, NH, "(p_s/Q) Σ m δ"),
    entry!("sigma_eps_K", 0, false, NH, "−(p_s/Q) Σ ½m|v|² δ"),
    entry!("sigma_eps_V", 0, false, NH, "(p_s/Q) Σ (½Σ_j V_jk + V^e_k) δ"),
    entry!("eps_ps", 0, true, NH, "p_s²/(2Qω)"),
    entry!("eps_s", 0, true, NH, "A(ln s − 1)/ω"),
    entry!("sigma_eps_ps", 0, true, NH, "p_s³/(2Q²ω) + (p_s/Qω)(Σm|v|² − A)"),
    entry!("sigma_eps_s", 0, true, NH, "(p_s/Qω) A ln s"),
    entry!("eps_bar_ps", 0, false, NH, "(p_s²/2Q) Σ (1/N) δ"),
    entry!("eps_bar_s", 0, false, NH, "A(ln s − 1) Σ (1/N) δ"),
    entry!("sigma_bar_ps", 0, false, NH, "[p_s³/2Q² + (p_s/Q)(Σm|v|² − A)] Σ (1/N) δ"),
    entry!("sigma_bar_s", 0, false, NH, "(p_s/Q) A ln s Σ (1/N) δ"),
    entry!("q_ps", 1, false, NH, "(p_s²/2Q) Σ (1/N) u δ"),
    entry!("q_s", 1, false, NH, "A(ln s − 1) Σ (1/N) u δ"),
    entry!("rho@s", 0, false, NH, "s Σ m δ"),
    entry!("rho_v@s", 1, false, NH, "s Σ m v δ"),
    entry!("eps_K@s", 0, false, NH, "s Σ ½m|v|² δ"),
    entry!("eps_V@s", 0, false, NH, "s Σ (½Σ_j V_jk + V^e_k) δ"),
    entry!("eps_ps@s", 0, true, NH, "s p_s²/(2Qω)"),
    entry!("eps_s@s", 0, true, NH, "s A(ln s − 1)/ω"),
    entry!("eps_bar_ps@s", 0, false, NH, "s (p_s²/2Q) Σ (1/N) δ"),
    entry!("eps_bar_s@s", 0, false, NH, "s A(ln s − 1) Σ (1/N) δ"),
    entry!("eps_P", 0, true, APR, "−P·F"),
    entry!("eps_bar_P", 0, false, APR, "−ω(P·F) Σ (1/N) δ"),
    entry!("q_P", 1, false, APR, "−ω(P·F) Σ (1/N) u δ"),
    entry!("sigma_eps_apr", 0, true, APR, "d ε_P / dt"),
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn fields_for(backend: Backend) -> impl Iterator<Item = &'static CatalogEntry> {
    CATALOG.iter().filter(move |e| e.backends.contains(&backend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique() {
        let names: HashSet<_> = CATALOG.iter().map(|e| e.name).collect();
        assert_eq!(names.len(), CATALOG.len());
    }
}
