"""From programs to semantic objects.

Three targets, at increasing expressiveness:

* elaborate_static: the body without pre/init/on becomes one mixed system
  (observations arrive as a per-variable record); programs with parameterized
  priors whose inputs stay free become a kernel over those inputs.
* elaborate_graph: the same fragment as a Bayesian network.  Directed rules
  first (priors and equations of the shape x = e feed kernels); when the
  side conditions fail, fall back to the factor graph of the top-level
  parallel blocks and convert it when it is a tree.
* elaborate_dynamic: the full language as a mixed automaton.  Every variable
  read through pre gets a companion variable carrying the previous value,
  pinned per step from the source state; guards are evaluated at the source
  state and selected through actions that assign a truth value to every
  guard.
"""

import itertools
from fractions import Fraction

from ..bayes import BayesianNetwork, MixedKernel, kernel_from_system, point_system
from ..core import (
    Domain,
    MixedSystem,
    State,
    Var,
    all_states,
    compose,
    marginal,
    nil_system,
    rat,
)
from ..errors import (
    DomainMismatch,
    MalformedSystem,
    NotIncremental,
    UnknownDistribution,
    MissingObservation,
    GuardNotBoolean,
)
from ..factorgraph import factor_graph, fg_to_bn, is_tree
from .syntax import (
    IF_FUNC,
    Const,
    Func,
    Pair,
    Pre,
    Program,
    SEq,
    SInit,
    SObserve,
    SOn,
    SPar,
    SPrior,
    VarRef,
    expr_vars,
    guard_exprs,
    pre_vars,
    print_expr,
    required_inits,
    rewrite_guard,
    statements,
)

PRE_MARK = "•"  # previous-value companion: •x carries x's value from n-1


def pre_name(x):
    return PRE_MARK + x


def base_name(x):
    return x[1:] if x.startswith(PRE_MARK) else x


# --- expressions --------------------------------------------------------------


def _domain(p: Program, name) -> Domain:
    return Domain(name, p.domains[name])


def _var(p: Program, name) -> Var:
    return Var(name, _domain(p, p.vars[base_name(name)]))


def rewrite_pre(e):
    """Replace pre x by the companion variable •x."""
    if isinstance(e, Pre):
        return VarRef(pre_name(e.name))
    if isinstance(e, Pair):
        return Pair(tuple(rewrite_pre(x) for x in e.items))
    if isinstance(e, Func):
        return Func(e.name, tuple(rewrite_pre(x) for x in e.args))
    return e


def eval_expr(p: Program, e, env):
    """Value of e under env (a mapping name -> value; companion names
    included).  Tables are total, so the only runtime failure is a non-boolean
    if-condition."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, VarRef):
        return env[e.name]
    if isinstance(e, Pre):
        return env[pre_name(e.name)]
    if isinstance(e, Pair):
        return tuple(eval_expr(p, x, env) for x in e.items)
    if isinstance(e, Func):
        if e.name == IF_FUNC:
            cond = eval_expr(p, e.args[0], env)
            if not isinstance(cond, bool):
                raise DomainMismatch("if-condition evaluated to %r" % (cond,))
            return eval_expr(p, e.args[1 if cond else 2], env)
        decl = p.funcs[e.name]
        vals = [eval_expr(p, x, env) for x in e.args]
        key = vals[0] if len(vals) == 1 else tuple(vals)
        return decl.table[key]
    raise MalformedSystem("cannot evaluate %r" % (e,))


# --- leaf systems --------------------------------------------------------------


def _dist_rows(p: Program, leaf: SPrior, env=None):
    """The probability table a prior denotes, resolving builtins and
    parameters.  env supplies values for a parameterized table's expression."""
    x = leaf.var
    dom_vals = p.domain_values(x)
    if leaf.dist == "Bernoulli":
        if not isinstance(leaf.arg, Const):
            raise UnknownDistribution(
                "Bernoulli takes a fixed rational parameter, in prior for %r" % x
            )
        prob = rat(leaf.arg.value)
        if prob < 0 or prob > 1:
            raise MalformedSystem("Bernoulli parameter %s outside [0,1]" % prob)
        if set(dom_vals) != {False, True}:
            raise DomainMismatch(
                "Bernoulli needs the boolean domain, %r has %r" % (x, dom_vals)
            )
        return {False: 1 - prob, True: prob}
    if leaf.dist == "Uniform":
        vals = p.domains.get(getattr(leaf.arg, "name", None))
        if vals is None:
            raise UnknownDistribution("Uniform takes a domain name, in prior for %r" % x)
        if set(vals) != set(dom_vals):
            raise DomainMismatch(
                "Uniform over %r does not match the domain of %r" % (vals, x)
            )
        share = Fraction(1, len(vals))
        return {v: share for v in vals}
    decl = p.dists.get(leaf.dist)
    if decl is None:
        raise UnknownDistribution("no distribution named %r" % leaf.dist)
    if decl.target_domain != p.vars[x]:
        raise DomainMismatch(
            "distribution %r is over %r but %r has domain %r"
            % (leaf.dist, decl.target_domain, x, p.vars[x])
        )
    if decl.param_domain is None:
        return decl.table
    if env is None:
        raise MalformedSystem("parameterized prior needs an environment")
    c = eval_expr(p, rewrite_pre(leaf.arg), env)
    rows = decl.table.get(c)
    if rows is None:
        raise DomainMismatch(
            "distribution %r has no case for parameter %r" % (leaf.dist, c)
        )
    return rows


def prior_system(p: Program, leaf: SPrior, env=None) -> MixedSystem:
    """A private copy of the variable's domain, weighted by the distribution,
    exposed through the equation x = outcome."""
    rows = _dist_rows(p, leaf, env)
    order = [v for v in p.domain_values(leaf.var) if v in rows]
    rel = {v: [State({leaf.var: v})] for v in order}
    return MixedSystem((order, rows), [_var(p, leaf.var)], rel)


def equation_system(p: Program, lhs, rhs) -> MixedSystem:
    """Trivial probability over the equation's solution set, enumerated over
    the product of the participating domains."""
    lhs = rewrite_pre(lhs)
    rhs = rewrite_pre(rhs)
    names = expr_vars(lhs)
    for nm in expr_vars(rhs):
        if nm not in names:
            names.append(nm)
    names.sort()
    vars = [_var(p, nm) for nm in names]
    sols = []
    for q in all_states(vars):
        env = dict(q.items())
        if eval_expr(p, lhs, env) == eval_expr(p, rhs, env):
            sols.append(q)
    return MixedSystem((["e"], {"e": Fraction(1)}), vars, {"e": sols})


def free_system(p: Program, name) -> MixedSystem:
    """No probability, no constraint: the variable may take any value."""
    v = _var(p, name)
    return MixedSystem(
        (["1"], {"1": Fraction(1)}), [v], {"1": [State({name: w}) for w in v.domain.values]}
    )


def observe_point(p: Program, name, obs) -> MixedSystem:
    if obs is None or name not in obs:
        raise MissingObservation("no value supplied for observed variable %r" % name)
    val = obs[name]
    if val not in p.domain_values(name):
        raise DomainMismatch(
            "observed value %r outside the domain of %r" % (val, name)
        )
    return point_system([_var(p, name)], State({name: val}))


def prior_kernel(p: Program, leaf: SPrior) -> MixedKernel:
    """A parameterized prior as a kernel from the parameter expression's
    variables to the declared variable."""
    arg = rewrite_pre(leaf.arg)
    in_vars = [_var(p, nm) for nm in expr_vars(arg)]

    def fn(q_in, _leaf=leaf):
        return prior_system(p, _leaf, env=dict(q_in.items()))

    return MixedKernel(in_vars, [_var(p, leaf.var)], fn, name="k[%s]" % leaf.var)


def _is_parameterized(p: Program, leaf: SPrior) -> bool:
    if leaf.dist in ("Bernoulli", "Uniform"):
        return False
    decl = p.dists.get(leaf.dist)
    if decl is None:
        raise UnknownDistribution("no distribution named %r" % leaf.dist)
    if decl.param_domain is not None and leaf.arg is None:
        raise UnknownDistribution(
            "distribution %r needs a parameter, in prior for %r" % (leaf.dist, leaf.var)
        )
    if decl.param_domain is None and leaf.arg is not None:
        raise UnknownDistribution(
            "distribution %r takes no parameter, in prior for %r" % (leaf.dist, leaf.var)
        )
    return decl.param_domain is not None


# --- kernel grafting ------------------------------------------------------------


def _graft(base: MixedSystem, K: MixedKernel) -> MixedSystem:
    """Compose a system with a kernel whose inputs the system determines:
    one independent draw per input cell, consulted according to the input
    values each row realizes."""
    cells = list(all_states(K.in_vars))
    cell_index = {c: i for i, c in enumerate(cells)}
    cell_sys = [K.apply(c) for c in cells]
    in_names = list(K.in_names)

    omegas = [base.omega] + [S.omega for S in cell_sys]
    merged = {v.name: v for v in base.vars}
    for v in K.out_vars:
        if v.name not in merged:
            merged[v.name] = v

    omega = []
    weights = {}
    rel = {}
    for combo in itertools.product(*omegas):
        mass = base.pi[combo[0]]
        for S, o in zip(cell_sys, combo[1:]):
            mass *= S.pi[o]
        omega.append(combo)
        weights[combo] = mass
        row = []
        for qb in base.rel[combo[0]]:
            idx = cell_index[qb.restrict(in_names)]
            for qc in cell_sys[idx].rel[combo[1 + idx]]:
                joined = {}
                joined.update(qb.as_dict())
                ok = True
                for nm, val in qc.items():
                    if nm in joined and joined[nm] != val:
                        ok = False
                        break
                    joined[nm] = val
                if ok:
                    row.append(State(joined))
        rel[combo] = row
    return MixedSystem((omega, weights), list(merged.values()), rel)


def _compose_all(systems) -> MixedSystem:
    if not systems:
        return nil_system()
    if len(systems) == 1:
        return systems[0]
    return compose(*systems)


def _fold(base: MixedSystem, kernels):
    """Graft every kernel whose inputs the running system determines;
    returns the grown system and the kernels still waiting for inputs."""
    pending = list(kernels)
    progress = True
    while pending and progress:
        progress = False
        for K in pending:
            if set(K.in_names) <= set(base.var_names):
                base = _graft(base, K)
                pending.remove(K)
                progress = True
                break
    return base, pending


# --- static semantics -----------------------------------------------------------


def _static_only(p: Program, leaves):
    for s in leaves:
        if isinstance(s, (SInit, SOn)):
            raise MalformedSystem(
                "the static semantics covers programs without pre/init/on"
            )
    if pre_vars(p.body):
        raise MalformedSystem(
            "the static semantics covers programs without pre/init/on"
        )


def _leaf_parts(p: Program, leaves, obs, observe_free):
    systems = []
    kernels = []
    for s in leaves:
        if isinstance(s, SObserve):
            if observe_free:
                systems.append(free_system(p, s.var))
            else:
                systems.append(observe_point(p, s.var, obs))
        elif isinstance(s, SPrior):
            if _is_parameterized(p, s):
                kernels.append(prior_kernel(p, s))
            else:
                systems.append(prior_system(p, s))
        elif isinstance(s, SEq):
            systems.append(equation_system(p, s.lhs, s.rhs))
        else:
            raise MalformedSystem("unexpected statement %r" % (s,))
    return systems, kernels


def elaborate_static(p: Program, obs=None):
    """One mixed system for the whole body (or a kernel over the inputs that
    parameterized priors leave free).  obs supplies the value of every
    observed variable."""
    leaves = statements(p.body)
    _static_only(p, leaves)
    systems, kernels = _leaf_parts(p, leaves, obs, observe_free=False)
    base = _compose_all(systems)
    base, left = _fold(base, kernels)
    if not left:
        return base

    produced = set()
    needed = set()
    for K in left:
        produced |= set(K.out_names)
        needed |= set(K.in_names)
    missing = sorted(needed - set(base.var_names) - produced)
    if not missing:
        raise NotIncremental("parameterized priors depend on each other in a cycle")
    in_vars = [_var(p, nm) for nm in missing]
    out_names = sorted((set(base.var_names) | produced) - set(missing))
    out_vars = [_var(p, nm) for nm in out_names]

    def fn(q_in, _base=base, _left=tuple(left), _missing=tuple(missing)):
        b2 = compose(_base, point_system([_var(p, nm) for nm in _missing], q_in))
        b2, l2 = _fold(b2, list(_left))
        if l2:
            raise NotIncremental(
                "parameterized priors depend on each other in a cycle"
            )
        return marginal(b2, out_names)

    return MixedKernel(in_vars, out_vars, fn)


# --- graph semantics --------------------------------------------------------------


class _DirectRulesFail(Exception):
    pass


def _direct_bn(p: Program, leaves) -> BayesianNetwork:
    producers = {}
    flagged = set()
    mentioned = set()
    kernels = []
    for s in leaves:
        if isinstance(s, SObserve):
            flagged.add(s.var)
            mentioned.add(s.var)
            continue
        if isinstance(s, SPrior):
            x = s.var
            K = (
                prior_kernel(p, s)
                if _is_parameterized(p, s)
                else kernel_from_system(prior_system(p, s), name="k[%s]" % x)
            )
        elif isinstance(s, SEq):
            if not isinstance(s.lhs, VarRef):
                raise _DirectRulesFail("equation lhs is not a variable")
            x = s.lhs.name
            rhs = s.rhs
            in_names = expr_vars(rhs)
            if x in in_names:
                raise _DirectRulesFail("equation defines %r from itself" % x)
            in_vars = [_var(p, nm) for nm in in_names]

            def fn(q_in, _rhs=rhs, _x=x):
                val = eval_expr(p, _rhs, dict(q_in.items()))
                if val not in p.domain_values(_x):
                    raise DomainMismatch(
                        "equation drives %r to %r outside its domain" % (_x, val)
                    )
                return point_system([_var(p, _x)], State({_x: val}))

            K = MixedKernel(in_vars, [_var(p, x)], fn, name="k[%s]" % x)
        else:
            raise _DirectRulesFail("statement %r has no directed rule" % (s,))
        if x in producers:
            raise _DirectRulesFail("two producers for %r" % x)
        producers[x] = K
        mentioned.add(x)
        mentioned.update(K.in_names)
        kernels.append(K)
    for x in flagged:
        if x in producers:
            raise _DirectRulesFail("observed variable %r must stay a source" % x)
    N = BayesianNetwork(
        kernels,
        sources=flagged,
        variables=[_var(p, nm) for nm in sorted(mentioned)],
    )
    from ..bayes import bn_validate

    problems = bn_validate(N)
    if problems:
        raise _DirectRulesFail("; ".join(problems))
    return N


def _block_system(p: Program, block, idx) -> MixedSystem:
    leaves = statements(block)
    systems, kernels = _leaf_parts(p, leaves, obs=None, observe_free=True)
    base = _compose_all(systems)
    base, left = _fold(base, kernels)
    if left:
        raise NotIncremental(
            "block %d has parameterized priors whose inputs it does not determine"
            % idx
        )
    return base


def program_factor_graph(p: Program):
    """The top-level parallel blocks as a factor graph, labelled S1..Sk."""
    leaves = statements(p.body)
    _static_only(p, leaves)
    blocks = p.body.items if isinstance(p.body, SPar) else (p.body,)
    systems = [_block_system(p, b, i + 1) for i, b in enumerate(blocks)]
    labels = ["S%d" % (i + 1) for i in range(len(systems))]
    return factor_graph(systems, labels)


def elaborate_graph(p: Program) -> BayesianNetwork:
    """The body as a Bayesian network: directed rules when every statement
    gives one and the union stays acyclic with observed variables as
    sources; otherwise the tree-shaped factor-graph rewrite rooted at the
    first block.  Anything else is not incremental."""
    leaves = statements(p.body)
    _static_only(p, leaves)
    try:
        return _direct_bn(p, leaves)
    except _DirectRulesFail as first:
        reason = str(first)
    fg = program_factor_graph(p)
    if not is_tree(fg):
        raise NotIncremental(
            "no directed reading (%s) and the factor graph is not a tree" % reason
        )
    return fg_to_bn(fg, root=fg.labels[0])


# --- dynamic semantics ---------------------------------------------------------


def eval_guard(p: Program, g, src: State):
    """A guard is a previous-state expression: pre x reads the source state's
    x directly."""
    if isinstance(g, Pre):
        return src[g.name]
    if isinstance(g, Const):
        return g.value
    if isinstance(g, Pair):
        return tuple(eval_guard(p, x, src) for x in g.items)
    if isinstance(g, Func):
        if g.name == IF_FUNC:
            cond = eval_guard(p, g.args[0], src)
            if not isinstance(cond, bool):
                raise DomainMismatch("if-condition evaluated to %r" % (cond,))
            return eval_guard(p, g.args[1 if cond else 2], src)
        vals = [eval_guard(p, x, src) for x in g.args]
        key = vals[0] if len(vals) == 1 else tuple(vals)
        return p.funcs[g.name].table[key]
    if isinstance(g, VarRef):
        # guards are rewritten before evaluation; a bare variable here means
        # the caller skipped rewrite_guard
        raise MalformedSystem("guard %r was not rewritten" % (g,))
    raise MalformedSystem("cannot evaluate guard %r" % (g,))


def program_guards(p: Program):
    """(label, rewritten guard) per distinct guard, sorted by label."""
    seen = {}
    for g in guard_exprs(p.body):
        seen.setdefault(print_expr(g), g)
    return sorted(seen.items())


def _check_guards_boolean(p: Program, guards):
    for label, g in guards:
        names = sorted(pre_vars(g))
        vars = [Var(nm, _domain(p, p.vars[nm])) for nm in names]
        for q in all_states(vars):
            val = eval_guard(p, g, q)
            if not isinstance(val, bool):
                raise GuardNotBoolean(
                    "guard %s evaluates to %r at %r" % (label, val, q)
                )


def _leaf_vars(p: Program, s):
    if isinstance(s, SObserve) or isinstance(s, SInit):
        return {s.var}
    if isinstance(s, SPrior):
        out = {s.var}
        if s.arg is not None and s.dist != "Uniform":
            out |= set(expr_vars(rewrite_pre(s.arg)))
        return out
    if isinstance(s, SEq):
        return set(expr_vars(rewrite_pre(s.lhs))) | set(expr_vars(rewrite_pre(s.rhs)))
    if isinstance(s, SOn):
        out = set()
        for branch in (s.then, s.els):
            for leaf in statements(branch):
                out |= _leaf_vars(p, leaf)
        return out
    raise MalformedSystem("unexpected statement %r" % (s,))


def elaborate_dynamic(p: Program):
    """The whole program as one mixed automaton.

    Variables: every name a statement touches, plus a •x companion for each
    variable read through pre (explicitly or from a guard).  Actions: total
    truth assignments to the guards, as states over the guard labels; with
    no guards the single empty assignment plays the role of "true".  The
    target at (q, action) composes, in order: the pins •x = q(x), every
    always-on statement, and the branch each guard's assigned value selects;
    variables the selected statements leave unconstrained stay free.
    """
    from ..automata import MixedAutomaton

    leaves = statements(p.body)
    pres = sorted(required_inits(p))
    guards = program_guards(p)
    _check_guards_boolean(p, guards)

    names = set()
    for s in leaves:
        names |= _leaf_vars(p, s)
    for x in pres:
        names.add(x)
        names.add(pre_name(x))
    vars = [_var(p, nm) for nm in sorted(names)]
    labels = [label for label, _ in guards]

    alphabet = [
        State(dict(zip(labels, bits)))
        for bits in itertools.product((False, True), repeat=len(labels))
    ]
    initial = State({s.var: s.value for s in leaves if isinstance(s, SInit)})

    def provider(q, a, _leaves=tuple(leaves)):
        if not isinstance(a, State) or set(a.names) != set(labels):
            return None
        for x in pres:
            if x not in q:
                return None
        systems = [
            point_system([Var(pre_name(x), _domain(p, p.vars[x]))],
                         State({pre_name(x): q[x]}))
            for x in pres
        ]
        active = []
        for s in _leaves:
            if isinstance(s, SInit):
                continue
            if isinstance(s, SOn):
                label = print_expr(rewrite_guard(s.guard))
                active.extend(statements(s.then if a[label] else s.els))
            else:
                active.append(s)
        more_sys, kernels = _leaf_parts(p, active, obs=None, observe_free=True)
        systems.extend(more_sys)
        base = _compose_all(systems)
        base, left = _fold(base, kernels)
        if left:
            raise NotIncremental(
                "parameterized priors need inputs the step does not determine"
            )
        pad = [free_system(p, nm) for nm in sorted(names - set(base.var_names))]
        if pad:
            base = compose(base, *pad)
        return base

    return MixedAutomaton(alphabet, vars, initial, provider=provider)
