//! Shipped experiment configurations.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "neumann-vs-dirichlet-well",
        description: "strict Neumann/Dirichlet inequality lambda_k^N < lambda_k^D for a radial well outside a disk",
        config: "\
name = neumann-vs-dirichlet-well
comparison = dirichlet_vs_neumann
domain.obstacle_radius = 1
domain.trunc_radius = 12
domain.grading = 2
domain.align_radii = 2
mesh.levels = 1, 2, 3
field1.potential = radial_well(8, 1, 2)
strict.indices = below(-0.05)
truncation.factor = 1.5
",
    },
    Preset {
        name: "mixed-robin-halfcircle",
        description: "strict Robin/Dirichlet inequality with Robin data on half of the obstacle, Dirichlet on the rest",
        config: "\
name = mixed-robin-halfcircle
comparison = dirichlet_vs_mixed
domain.obstacle_radius = 1
domain.trunc_radius = 12
domain.grading = 2
domain.align_radii = 2
mesh.levels = 1, 2, 3
bc.omega = 0:1pi
bc.alpha = 1
field1.potential = radial_well(8, 1, 2)
strict.indices = 1
",
    },
    Preset {
        name: "slow-decay",
        description: "infinitely many bound states for V = -|x|^(-3/2): Dirichlet counts below -1e-3 grow with R",
        config: "\
name = slow-decay
comparison = dirichlet_vs_neumann
domain.obstacle_radius = 1
domain.trunc_radius = 8, 16, 32, 64
domain.grading = 2
mesh.levels = 0, 1, 2
field1.potential = radial_power(1, 0.5, 1)
threshold = -1e-3
probes = -1e-3
strict.indices = none
counts.require_growth = true
",
    },
    Preset {
        name: "coefficient-potential-bump",
        description:
            "ordered coefficients, potential condition: V2 = V1 + bump on a ball gives lambda_k(A1) < lambda_k(A2)",
        config: "\
name = coefficient-potential-bump
comparison = coefficient_pair
domain.obstacle_radius = 1
domain.trunc_radius = 12
domain.grading = 2
domain.align_radii = 2
mesh.levels = 1, 2, 3
field1.potential = radial_well(8, 1, 2)
field2.potential = radial_well(8, 1, 2) + ball_bump(1.5, 0, 0.3, 1, smooth)
strict.ball = 1.5, 0, 0.3
strict.indices = 1
",
    },
    Preset {
        name: "coefficient-matrix-bump",
        description:
            "ordered coefficients, matrix condition: a2 = (1 + 0.5 bump) a1 on a ball gives lambda_k(A1) < lambda_k(A2)",
        config: "\
name = coefficient-matrix-bump
comparison = coefficient_pair
domain.obstacle_radius = 1
domain.trunc_radius = 12
domain.grading = 2
domain.align_radii = 2
mesh.levels = 1, 2, 3
field1.potential = radial_well(8, 1, 2)
field2.potential = radial_well(8, 1, 2)
field2.coefficient = identity + bump(1.5, 0, 0.3, 0.5, smooth)
strict.ball = 1.5, 0, 0.3
strict.indices = 1
",
    },
    Preset {
        name: "zero-potential",
        description: "free Laplacian outside a disk: no eigenvalues below 0, every verdict vacuous",
        config: "\
name = zero-potential
comparison = dirichlet_vs_neumann
domain.obstacle_radius = 1
domain.trunc_radius = 12
domain.grading = 2
mesh.levels = 0, 1, 2
field1.potential = zero
",
    },
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
