"""Writes the 30-document retrieval corpus and the 11-query benchmark."""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent / "corpus"

TOPICS = {
    "diffusion": {
        "pool": [
            "The heat equation models diffusion of temperature through a conducting medium.",
            "A diffusion coefficient alpha scales the Laplacian of the temperature field.",
            "Explicit heat solvers march the temperature forward one time step at a time.",
            "In Devito the temperature lives on a TimeFunction and u.dt equals alpha times u.laplace.",
            "Thermal diffusion smooths sharp temperature gradients as time advances.",
            "The diffusion number alpha dt over dx squared controls the heat stability limit.",
            "Heat conduction problems usually fix the temperature on the outer edges.",
            "Diffusion of heat is parabolic, so information spreads at infinite speed.",
        ],
        "docs": {
            "heat_explicit.md": ("Explicit heat equation solver",
                "Forward Euler in time with centred second differences in space gives the classic FTCS heat scheme. "
                "Each temperature update reads the previous temperature level only."),
            "heat_crank_nicolson.md": ("Crank-Nicolson heat diffusion",
                "Crank-Nicolson averages the diffusion operator between old and new temperature levels. "
                "The implicit heat update is unconditionally stable and second order in time."),
            "diffusion_3d.md": ("Three-dimensional thermal diffusion",
                "A 3D heat grid adds a z derivative to the diffusion Laplacian. "
                "Memory for the temperature grows with the cube of the resolution."),
            "thermal_conductivity.md": ("Variable thermal conductivity",
                "When conductivity varies in space the heat flux becomes a divergence of kappa times the temperature gradient. "
                "A Function holds the conductivity field next to the temperature."),
            "heat_stability.md": ("Heat equation stability limit",
                "The explicit heat scheme is stable when the diffusion number stays below one half in 1D. "
                "In two dimensions the temperature update needs a quarter."),
        },
    },
    "waves": {
        "pool": [
            "The acoustic wave equation propagates pressure waves at the sound velocity.",
            "Wave solvers need a second time derivative, so the TimeFunction uses time_order=2.",
            "Seismic wave modelling injects a source wavelet and records receivers.",
            "The wave velocity model sets how fast the acoustic wavefield travels.",
            "In Devito the acoustic wave update is m times u.dt2 minus u.laplace equal to zero.",
            "Wavefield snapshots show the acoustic wavefront expanding from the source.",
            "Wave propagation is hyperbolic and moves information at finite velocity.",
            "Seismic imaging reuses the forward acoustic wave simulation many times.",
        ],
        "docs": {
            "acoustic_wave_2d.md": ("Two-dimensional acoustic wave propagation",
                "A 2D acoustic wave model uses a velocity field and a squared slowness m. "
                "The pressure wavefield leaps forward with a centred second order time stencil."),
            "wave_1d_string.md": ("Vibrating string wave equation",
                "A 1D string obeys the same wave equation with tension and density setting the wave speed. "
                "Fixed string ends reflect every wave back into the domain."),
            "wave_damping_layers.md": ("Absorbing damping layers for waves",
                "A damping mask around the domain absorbs outgoing waves before they reflect. "
                "The acoustic wave update gains a damp times u.dt term inside the sponge."),
            "seismic_ricker_source.md": ("Ricker wavelet seismic source",
                "A Ricker wavelet with a peak frequency drives the seismic wave simulation. "
                "SparseTimeFunction injection spreads the source onto nearby wave grid points."),
            "wave_time_order.md": ("Time order for wave solvers",
                "Second order time stepping keeps three wavefield levels in memory. "
                "The acoustic wave Courant number limits the time step for the velocity maximum."),
        },
    },
    "advection": {
        "pool": [
            "Linear advection transports a profile at constant speed c without changing its shape.",
            "Upwind differencing takes the spatial derivative from the side the flow comes from.",
            "Advection schemes suffer from numerical diffusion that smears transported fronts.",
            "The advection velocity sign decides whether the upwind stencil looks left or right.",
            "In Devito an upwind advection derivative can be written with first_derivative and side=left.",
            "Transport of a passive scalar by a flow field is the canonical advection problem.",
            "Advection is hyperbolic with characteristics moving at the transport velocity.",
            "Central differences for advection need extra dissipation to stay stable.",
        ],
        "docs": {
            "upwind_scheme.md": ("Upwind scheme for advection",
                "First order upwind differencing for advection is monotone and simple. "
                "It adds numerical diffusion proportional to the grid spacing."),
            "advection_periodic.md": ("Periodic advection domains",
                "A transported advection pulse leaving the right edge re-enters on the left. "
                "Periodic wrap-around keeps the advected mass constant."),
            "burgers_nonlinear.md": ("Nonlinear Burgers advection",
                "Burgers equation advects the velocity by itself and steepens into shocks. "
                "Upwind advection of u times u.dx needs the local velocity sign."),
            "lax_wendroff.md": ("Lax-Wendroff advection",
                "Lax-Wendroff adds a second order correction to upwind advection. "
                "It reduces numerical diffusion but introduces advection dispersion ripples."),
            "advection_courant.md": ("Courant number for advection",
                "Explicit advection needs the Courant number c dt over dx at most one. "
                "A larger advection time step lets the profile skip grid cells."),
        },
    },
    "elliptic": {
        "pool": [
            "Laplace and Poisson equations are elliptic boundary value problems without time.",
            "Jacobi iteration replaces each value by the average of its four neighbours.",
            "An elliptic solve iterates until the residual norm falls below a tolerance.",
            "The Poisson source term b appears on the right of the Laplacian.",
            "In Devito a Jacobi sweep is an Operator applied repeatedly with swapped buffers.",
            "Elliptic solutions depend on every boundary value at once.",
            "Convergence of Jacobi slows as the Poisson grid gets finer.",
            "Pseudo-transient continuation turns a Laplace problem into a steady-state iteration.",
        ],
        "docs": {
            "laplace_jacobi.md": ("Laplace equation by Jacobi iteration",
                "The Laplace solve starts from zeros and sweeps Jacobi updates over the interior. "
                "Two Functions alternate as source and target of each Jacobi sweep."),
            "poisson_solver.md": ("Poisson solver with a source",
                "The Poisson equation adds a source b to the Laplace operator. "
                "The Jacobi update subtracts the Poisson source scaled by the grid spacing."),
            "elliptic_residual.md": ("Residual norms for elliptic solves",
                "The L2 norm of the elliptic residual measures how far the Jacobi iterate is from convergence. "
                "Stopping on a relative Poisson residual avoids wasted sweeps."),
            "multigrid_smoothing.md": ("Multigrid smoothing for Poisson",
                "Multigrid uses Jacobi as a smoother on a hierarchy of Poisson grids. "
                "Coarse grids remove the long wavelength elliptic error."),
            "pseudo_timestepping.md": ("Pseudo-transient relaxation for Laplace",
                "A fictitious time derivative drives the Laplace field toward its steady state. "
                "Each pseudo step behaves like one Jacobi relaxation of the elliptic problem."),
        },
    },
    "boundaries": {
        "pool": [
            "Boundary conditions close the discrete system at the edges of the grid.",
            "A Dirichlet boundary condition fixes the field value on the boundary.",
            "A Neumann boundary condition fixes the normal derivative at the edge.",
            "In Devito boundary conditions are extra Eq objects evaluated after the interior update.",
            "Subdomains restrict a boundary equation to a slab of grid points.",
            "Boundary equations index the edge through x.symbolic_min and x.symbolic_max.",
            "Ghost points mirror interior values to impose a zero-gradient boundary.",
            "Mixing Dirichlet and Neumann conditions on different edges is common.",
        ],
        "docs": {
            "dirichlet_bc.md": ("Dirichlet boundary conditions",
                "Setting u[t+1, 0] equal to a constant imposes a Dirichlet boundary. "
                "Zero Dirichlet values model a clamped or cooled edge."),
            "neumann_bc.md": ("Neumann boundary conditions",
                "Copying the first interior value to the edge imposes a zero Neumann boundary. "
                "The Neumann condition keeps the boundary flux at zero."),
            "subdomain_bc.md": ("Boundary conditions on subdomains",
                "A SubDomain names the left or right boundary slab. "
                "Equations with subdomain= apply the boundary condition only there."),
            "halo_ghost_points.md": ("Halo and ghost points at boundaries",
                "The grid halo stores ghost points that boundary conditions can fill. "
                "Stencils near the boundary read the halo instead of missing values."),
            "boundary_equations.md": ("Writing boundary equations",
                "A list of boundary Eq objects follows the interior update in the Operator. "
                "Each boundary equation touches only the edge indices."),
        },
    },
    "operators": {
        "pool": [
            "An Operator compiles symbolic equations into optimised C code.",
            "The Devito compiler applies loop blocking and vectorisation automatically.",
            "OpenMP threads parallelise the generated loops of an Operator.",
            "MPI domain decomposition splits the grid across ranks with halo exchanges.",
            "Operator.apply takes time_M and dt to run a chosen number of steps.",
            "Performance summaries report GFlops and run time per Operator section.",
            "The generated code is cached so an Operator compiles only once.",
            "Compiler flags and the DEVITO_LANGUAGE setting select the parallel backend.",
            "Operator profiling with DEVITO_LOGGING set to DEBUG prints the compiler passes and timings.",
        ],
        "docs": {
            "operator_apply.md": ("Running an Operator",
                "Operator.apply binds runtime arguments such as time_M and dt and executes the compiled kernel. "
                "Symbols missing at apply time fall back to their defaults."),
            "openmp_threads.md": ("OpenMP parallel Operator loops",
                "Setting DEVITO_LANGUAGE to openmp makes the compiler emit parallel loops. "
                "Thread count follows OMP_NUM_THREADS."),
            "mpi_decomposition.md": ("MPI domain decomposition of an Operator",
                "With DEVITO_MPI enabled each rank owns a subgrid of the Operator domain. "
                "Halo exchanges keep the stencil neighbours consistent across ranks."),
            "cache_blocking.md": ("Cache blocking in Operator code",
                "Loop blocking tiles the space loops so the working set stays in cache. "
                "Block sizes are tunable through the autotuner of the Operator."),
            "code_generation.md": ("Inspecting Operator C code",
                "Printing an Operator shows the generated C kernel. "
                "The compiler lowers Eq objects through several intermediate representations."),
        },
    },
}

CODE = {
    "diffusion": "u = TimeFunction(name='u', grid=grid, space_order=2)\nheat = Eq(u.dt, alpha * u.laplace)\nstencil = Eq(u.forward, solve(heat, u.forward))\nop = Operator([stencil])\nop.apply(time_M=nt, dt=dt)",
    "waves": "u = TimeFunction(name='u', grid=grid, time_order=2, space_order=4)\nwave = Eq(m * u.dt2 - u.laplace, 0)\nstencil = Eq(u.forward, solve(wave, u.forward))\nop = Operator([stencil] + src_term)\nop.apply(time_M=nt, dt=dt)",
    "advection": "u = TimeFunction(name='u', grid=grid, space_order=1)\nflux = first_derivative(u, dim=x, side=left)\nadvect = Eq(u.forward, u - dt * c * flux)\nop = Operator([advect])\nop.apply(time_M=nt, dt=dt)",
    "elliptic": "p = Function(name='p', grid=grid, space_order=2)\npn = Function(name='pn', grid=grid, space_order=2)\njacobi = Eq(p, solve(Eq(pn.laplace, b), pn))\nop = Operator([jacobi])\nfor _ in range(iters): op.apply(p=p, pn=pn)",
    "boundaries": "bc = [Eq(u[t + 1, 0], 0.0), Eq(u[t + 1, nx - 1], u[t + 1, nx - 2])]\nleft = Eq(u.forward, 0.0, subdomain=grid.subdomains['left'])\nop = Operator([update] + bc)\nop.apply(time_M=nt, dt=dt)",
    "operators": "op = Operator([stencil], opt=('advanced', {'blockinner': True}))\nsummary = op.apply(time_M=nt, dt=dt)\nprint(summary.globals['fdlike'].gflopss)\nprint(op.ccode)",
}

QUERIES = [
    ("How do I solve the heat equation with diffusion in Devito?", "basic", "diffusion", ["heat", "diffusion"]),
    ("acoustic wave propagation with a velocity model", "basic", "waves", ["wave", "acoustic"]),
    ("upwind advection transport scheme", "basic", "advection", ["advection", "upwind"]),
    ("Laplace equation solved by Jacobi iteration", "basic", "elliptic", ["laplace", "jacobi"]),
    ("Dirichlet and Neumann boundary conditions", "intermediate", "boundaries", ["dirichlet", "neumann"]),
    ("Operator compiler parallel performance with OpenMP and MPI", "intermediate", "operators", ["openmp", "mpi"]),
    ("temperature stability limit for explicit heat solvers", "intermediate", "diffusion", ["stability", "heat"]),
    ("seismic wave simulation with second order time stepping", "intermediate", "waves", ["seismic", "wavefield"]),
    ("Poisson residual convergence of elliptic Jacobi sweeps", "advanced", "elliptic", ["poisson", "residual"]),
    ("numerical diffusion and Courant limits of advection schemes", "advanced", "advection", ["courant", "advection"]),
    ("boundary equations on subdomains and halo ghost points", "advanced", "boundaries", ["subdomain", "halo"]),
]


def doc_text(title, focus, pool, code, offset):
    sentences = [pool[(offset + k) % len(pool)] for k in range(len(pool))]
    body = [focus, " ".join(sentences[:4]), "```python\n" + code + "\n```", " ".join(sentences[4:]) + " The tutorials include complete runnable scripts for this case and its variants."]
    return "# " + title + "\n\n" + "\n\n".join(body) + "\n"


def main():
    for topic, spec in TOPICS.items():
        folder = ROOT / topic
        folder.mkdir(parents=True, exist_ok=True)
        for i, (name, (title, focus)) in enumerate(spec["docs"].items()):
            text = doc_text(title, focus, spec["pool"], CODE[topic], i)
            assert len(text) >= 1000, (name, len(text))
            (folder / name).write_text(text)
    with open(ROOT.parent / "benchmark.jsonl", "w") as out:
        for text, tier, topic, expected in QUERIES:
            truth = sorted(f"{topic}/{name}" for name in TOPICS[topic]["docs"])
            out.write(json.dumps({"text": text, "tier": tier, "ground_truth": truth, "expected_topics": expected}) + "\n")


if __name__ == "__main__":
    main()
