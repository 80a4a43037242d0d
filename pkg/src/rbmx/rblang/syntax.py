"""Surface syntax of the modelling minilanguage: tokenizer, recursive-descent
parser, AST, and a canonical printer whose output reparses to an equal AST.

A source file is a header of declarations followed by a body of statements
joined by ``||`` (a leading ``|`` or ``||`` before the first statement is
allowed, mirroring the usual vertical list layout):

    domain bit = { 0, 1 }
    var x : bit
    func inc : bit -> bit { 0 -> 1, 1 -> 0 }

    || init x = 0
    || x = inc(pre x)

Declarations give every variable a finite domain and every external
function/operator a finite table, so elaboration can enumerate relations
exhaustively.  Distributions are declared as rational tables (optionally
parameterized over a domain); Bernoulli and Uniform are built in.
"""

from dataclasses import dataclass
from fractions import Fraction

from ..errors import (
    DomainMismatch,
    MalformedSystem,
    MissingInit,
    RbSyntaxError,
    UndeclaredVariable,
)

KEYWORDS = frozenset(
    "domain var func op dist observe pre init on then else if T F".split()
)

BUILTIN_DISTS = frozenset(("Bernoulli", "Uniform"))

IF_FUNC = "if"  # if-then-else expressions are carried as this function name


# --- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: object  # int | bool | str | Fraction (Fraction only in dist args)


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Pair:
    items: tuple


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple


@dataclass(frozen=True)
class Pre:
    name: str


@dataclass(frozen=True)
class SPrior:
    var: str
    dist: str
    arg: object  # Expr or None


@dataclass(frozen=True)
class SEq:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class SObserve:
    var: str


@dataclass(frozen=True)
class SInit:
    var: str
    value: object


@dataclass(frozen=True)
class SOn:
    guard: object
    then: object
    els: object


@dataclass(frozen=True)
class SPar:
    items: tuple


@dataclass
class FuncDecl:
    name: str
    kind: str  # "func" or "op"
    in_domains: tuple  # domain names
    out_domain: str
    table: dict  # scalar-or-tuple key -> value


@dataclass
class DistDecl:
    name: str
    param_domain: object  # domain name or None
    target_domain: str
    table: dict  # value -> Fraction, or param value -> {value -> Fraction}


@dataclass
class Program:
    domains: dict  # name -> tuple of values
    vars: dict  # name -> domain name
    funcs: dict  # name -> FuncDecl
    dists: dict  # name -> DistDecl
    body: object  # Stmt or None

    def domain_values(self, var):
        return self.domains[self.vars[var]]


# --- tokenizer ---------------------------------------------------------------


_PUNCT2 = ("||", "->")
_PUNCT1 = "(){},:=~|/"


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return "Token(%s, %r, %d:%d)" % (self.kind, self.text, self.line, self.col)


def tokenize(text):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(Token("punct", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise RbSyntaxError("unterminated string", start_line, start_col)
            toks.append(Token("str", text[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            word = text[i:j]
            kind = "int" if word.lstrip("-").isdigit() else "num"
            toks.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c in _PUNCT1:
            toks.append(Token("punct", c, start_line, start_col))
            i += 1
            col += 1
            continue
        raise RbSyntaxError("stray character %r" % c, start_line, start_col)
    toks.append(Token("eof", "", line, col))
    return toks


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k=0):
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text):
        return self.peek().text == text and self.peek().kind in ("punct", "ident")

    def at_kw(self, word):
        t = self.peek()
        return t.kind == "ident" and t.text == word

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        t = self.peek()
        if t.text != text or t.kind not in ("punct", "ident"):
            raise RbSyntaxError(
                "expected %r, found %r" % (text, t.text or "end of input"),
                t.line,
                t.col,
            )
        return self.next()

    def fail(self, msg):
        t = self.peek()
        raise RbSyntaxError(msg, t.line, t.col)

    def ident(self, what="name"):
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail("expected %s, found %r" % (what, t.text or "end of input"))
        return self.next().text

    # values and numbers

    def value(self):
        """A literal domain value: integer, T/F boolean, or quoted symbol."""
        t = self.peek()
        if t.kind == "int":
            self.next()
            return int(t.text)
        if t.kind == "str":
            self.next()
            return t.text
        if t.kind == "ident" and t.text == "T":
            self.next()
            return True
        if t.kind == "ident" and t.text == "F":
            self.next()
            return False
        self.fail("expected a value, found %r" % (t.text or "end of input"))

    def rational(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            num = int(t.text)
            if self.accept("/"):
                u = self.peek()
                if u.kind != "int":
                    self.fail("expected denominator")
                self.next()
                return Fraction(num, int(u.text))
            return Fraction(num)
        if t.kind == "num":
            self.next()
            return Fraction(t.text)
        self.fail("expected a rational number, found %r" % (t.text or "end of input"))

    def key_value(self):
        """A table key: a value or a tuple of values."""
        if self.at("("):
            self.next()
            vals = [self.value()]
            while self.accept(","):
                vals.append(self.value())
            self.expect(")")
            return vals[0] if len(vals) == 1 else tuple(vals)
        return self.value()

    # declarations

    def parse_program(self):
        p = Program({}, {}, {}, {}, None)
        while True:
            t = self.peek()
            if t.kind != "ident" or t.text not in ("domain", "var", "func", "op", "dist"):
                break
            if t.text == "domain":
                self.decl_domain(p)
            elif t.text == "var":
                self.decl_var(p)
            elif t.text in ("func", "op"):
                self.decl_func(p)
            else:
                self.decl_dist(p)
        if self.peek().kind != "eof":
            p.body = self.parse_body()
        t = self.peek()
        if t.kind != "eof":
            self.fail("trailing input %r" % t.text)
        _validate(p)
        return p

    def decl_domain(self, p):
        self.expect("domain")
        name = self.ident("domain name")
        if name in p.domains:
            self.fail("domain %r declared twice" % name)
        self.expect("=")
        self.expect("{")
        vals = [self.value()]
        while self.accept(","):
            vals.append(self.value())
        self.expect("}")
        if len(set(vals)) != len(vals):
            self.fail("domain %r repeats a value" % name)
        p.domains[name] = tuple(vals)

    def decl_var(self, p):
        self.expect("var")
        names = [self.ident("variable name")]
        while self.accept(","):
            names.append(self.ident("variable name"))
        self.expect(":")
        dom = self.ident("domain name")
        for nm in names:
            if nm in p.vars:
                self.fail("variable %r declared twice" % nm)
            p.vars[nm] = dom

    def decl_func(self, p):
        kind = self.next().text  # func or op
        name = self.ident("function name")
        if name in p.funcs or name == IF_FUNC:
            self.fail("function %r declared twice" % name)
        self.expect(":")
        if self.accept("("):
            in_doms = [self.ident("domain name")]
            while self.accept(","):
                in_doms.append(self.ident("domain name"))
            self.expect(")")
        else:
            in_doms = [self.ident("domain name")]
        self.expect("->")
        out_dom = self.ident("domain name")
        self.expect("{")
        table = {}
        while True:
            key = self.key_value()
            self.expect("->")
            val = self.value()
            if key in table:
                self.fail("function %r maps %r twice" % (name, key))
            table[key] = val
            if not self.accept(","):
                break
        self.expect("}")
        p.funcs[name] = FuncDecl(name, kind, tuple(in_doms), out_dom, table)

    def decl_dist(self, p):
        self.expect("dist")
        name = self.ident("distribution name")
        if name in p.dists or name in BUILTIN_DISTS:
            self.fail("distribution %r declared twice" % name)
        param = None
        if self.accept("("):
            param = self.ident("domain name")
            self.expect(")")
        self.expect(":")
        target = self.ident("domain name")
        self.expect("{")
        if param is None:
            table = self.dist_rows()
        else:
            table = {}
            while True:
                key = self.key_value()
                self.expect("->")
                self.expect("{")
                rows = self.dist_rows()
                self.expect("}")
                if key in table:
                    self.fail("distribution %r maps %r twice" % (name, key))
                table[key] = rows
                if not self.accept(","):
                    break
        self.expect("}")
        p.dists[name] = DistDecl(name, param, target, table)

    def dist_rows(self):
        """value : rational pairs up to (not including) the closing brace."""
        rows = {}
        while True:
            val = self.value()
            self.expect(":")
            prob = self.rational()
            if val in rows:
                self.fail("distribution repeats value %r" % (val,))
            rows[val] = prob
            if not self.accept(","):
                break
        return rows

    # statements

    def parse_body(self):
        if self.at("||") or self.at("|"):
            self.next()
        items = [self.parse_stmt()]
        while self.accept("||"):
            items.append(self.parse_stmt())
        if len(items) == 1:
            return items[0]
        return SPar(tuple(items))

    def parse_stmt(self):
        t = self.peek()
        if t.kind == "ident" and t.text == "observe":
            self.next()
            names = [self.ident("variable name")]
            while self.accept(","):
                names.append(self.ident("variable name"))
            if len(names) == 1:
                return SObserve(names[0])
            return SPar(tuple(SObserve(nm) for nm in names))
        if t.kind == "ident" and t.text == "init":
            self.next()
            var = self.ident("variable name")
            self.expect("=")
            return SInit(var, self.value())
        if t.kind == "ident" and t.text == "on":
            self.next()
            guard = self.parse_expr()
            self.expect("then")
            then = self.parse_branch()
            self.expect("else")
            els = self.parse_branch()
            return SOn(guard, then, els)
        if t.text == "{":
            self.next()
            body = self.parse_body()
            self.expect("}")
            return body
        if t.text == "(":
            # either a parenthesized statement or a pair-typed equation lhs
            mark = self.i
            try:
                self.next()
                inner = self.parse_stmt()
                self.expect(")")
                if not self.at("="):
                    return inner
            except RbSyntaxError:
                pass
            self.i = mark
        if t.kind == "ident" and t.text not in KEYWORDS and self.peek(1).text == "~":
            var = self.ident()
            self.expect("~")
            dist = self.ident("distribution name")
            arg = None
            if self.accept("("):
                arg = self.parse_prior_arg()
                self.expect(")")
            return SPrior(var, dist, arg)
        lhs = self.parse_expr()
        self.expect("=")
        rhs = self.parse_expr()
        return SEq(lhs, rhs)

    def parse_branch(self):
        return self.parse_stmt()

    def parse_prior_arg(self):
        t = self.peek()
        if t.kind == "num":
            return Const(self.rational())
        if t.kind == "int" and self.peek(1).text in ("/", ")"):
            return Const(self.rational()) if self.peek(1).text == "/" else Const(int(self.next().text))
        return self.parse_expr()

    # expressions

    def parse_expr(self):
        t = self.peek()
        if t.kind in ("int", "str") or (t.kind == "ident" and t.text in ("T", "F")):
            return Const(self.value())
        if t.kind == "num":
            self.fail("decimal literals are only allowed as distribution parameters")
        if t.kind == "ident" and t.text == "if":
            self.next()
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_expr()
            self.expect("else")
            els = self.parse_expr()
            return Func(IF_FUNC, (cond, then, els))
        if t.kind == "ident" and t.text == "pre":
            self.next()
            if self.accept("("):
                name = self.ident("variable name (pre nests no deeper)")
                self.expect(")")
            else:
                name = self.ident("variable name (pre nests no deeper)")
            return Pre(name)
        if t.kind == "ident" and t.text not in KEYWORDS:
            name = self.next().text
            if self.at("("):
                self.next()
                args = [self.parse_expr()]
                while self.accept(","):
                    args.append(self.parse_expr())
                self.expect(")")
                return Func(name, tuple(args))
            return VarRef(name)
        if t.text == "(":
            self.next()
            items = [self.parse_expr()]
            while self.accept(","):
                items.append(self.parse_expr())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return Pair(tuple(items))
        self.fail("expected an expression, found %r" % (t.text or "end of input"))


def parse(text) -> Program:
    """Parse and validate a program; every error carries a position when one
    is known."""
    return _Parser(text).parse_program()


# --- static analysis helpers --------------------------------------------------


def expr_vars(e, pre_as=None):
    """Variable names read by an expression.  Pre nodes are skipped unless
    pre_as is given, in which case they contribute pre_as(name)."""
    out = []

    def walk(e):
        if isinstance(e, VarRef):
            out.append(e.name)
        elif isinstance(e, Pre):
            if pre_as is not None:
                out.append(pre_as(e.name))
        elif isinstance(e, Pair):
            for x in e.items:
                walk(x)
        elif isinstance(e, Func):
            for x in e.args:
                walk(x)

    walk(e)
    seen = set()
    uniq = []
    for nm in out:
        if nm not in seen:
            seen.add(nm)
            uniq.append(nm)
    return uniq


def pre_vars(node):
    """All variables appearing under pre anywhere below node (exprs and
    statements alike)."""
    out = set()

    def walk(x):
        if isinstance(x, Pre):
            out.add(x.name)
        elif isinstance(x, Pair):
            for y in x.items:
                walk(y)
        elif isinstance(x, Func):
            for y in x.args:
                walk(y)
        elif isinstance(x, SPrior):
            if x.arg is not None:
                walk(x.arg)
        elif isinstance(x, SEq):
            walk(x.lhs)
            walk(x.rhs)
        elif isinstance(x, SOn):
            walk(x.guard)
            walk(x.then)
            walk(x.els)
        elif isinstance(x, SPar):
            for y in x.items:
                walk(y)

    walk(node)
    return out


def statements(body):
    """Flatten the parallel structure into a list of leaf statements (SOn
    counts as a leaf; its branches are elaborated separately)."""
    if body is None:
        return []
    if isinstance(body, SPar):
        out = []
        for s in body.items:
            out.extend(statements(s))
        return out
    return [body]


def guard_exprs(body):
    """The guards of every on-statement, with bare variables rewritten to
    their previous versions (a guard is evaluated at the previous state)."""
    return [rewrite_guard(s.guard) for s in statements(body) if isinstance(s, SOn)]


def rewrite_guard(e):
    if isinstance(e, VarRef):
        return Pre(e.name)
    if isinstance(e, Pair):
        return Pair(tuple(rewrite_guard(x) for x in e.items))
    if isinstance(e, Func):
        return Func(e.name, tuple(rewrite_guard(x) for x in e.args))
    return e


def required_inits(p: Program):
    """Variables whose previous value is read somewhere: explicitly pre'd
    ones plus every variable a guard mentions."""
    need = set(pre_vars(p.body))
    for g in guard_exprs(p.body):
        need |= pre_vars(g)
    return need


def _validate(p: Program):
    for name, dom in p.vars.items():
        if dom not in p.domains:
            raise UndeclaredVariable(
                "variable %r uses undeclared domain %r" % (name, dom)
            )
    for f in p.funcs.values():
        for d in f.in_domains + (f.out_domain,):
            if d not in p.domains:
                raise UndeclaredVariable(
                    "function %r uses undeclared domain %r" % (f.name, d)
                )
        full = [(v,) for v in p.domains[f.in_domains[0]]]
        for d in f.in_domains[1:]:
            full = [k + (v,) for k in full for v in p.domains[d]]
        keys = {k[0] if len(k) == 1 else k for k in full}
        have = set(f.table)
        if have != keys:
            missing = sorted(keys - have, key=repr)
            extra = sorted(have - keys, key=repr)
            raise DomainMismatch(
                "function %r table mismatch: missing %r, extra %r"
                % (f.name, missing, extra)
            )
        for v in f.table.values():
            if v not in p.domains[f.out_domain]:
                raise DomainMismatch(
                    "function %r produces %r outside %r" % (f.name, v, f.out_domain)
                )
    for d in p.dists.values():
        doms = [d.target_domain] + ([d.param_domain] if d.param_domain else [])
        for dd in doms:
            if dd not in p.domains:
                raise UndeclaredVariable(
                    "distribution %r uses undeclared domain %r" % (d.name, dd)
                )
        tables = {None: d.table} if d.param_domain is None else d.table
        if d.param_domain is not None:
            want = set(p.domains[d.param_domain])
            if set(tables) != want:
                raise DomainMismatch(
                    "distribution %r must give a table for every value of %r"
                    % (d.name, d.param_domain)
                )
        for rows in tables.values():
            total = Fraction(0)
            for val, prob in rows.items():
                if val not in p.domains[d.target_domain]:
                    raise DomainMismatch(
                        "distribution %r weights %r outside %r"
                        % (d.name, val, d.target_domain)
                    )
                if prob < 0:
                    raise MalformedSystem(
                        "distribution %r has negative weight" % d.name
                    )
                total += prob
            if total != 1:
                raise MalformedSystem(
                    "distribution %r sums to %s, not 1" % (d.name, total)
                )
    _validate_body(p)
    inits = {s.var for s in statements(p.body) if isinstance(s, SInit)}
    for name in sorted(required_inits(p)):
        if name not in inits:
            raise MissingInit(
                "variable %r is read through pre but has no init" % name
            )


def _validate_expr(p, e, where):
    if isinstance(e, VarRef):
        if e.name not in p.vars:
            raise UndeclaredVariable("undeclared variable %r in %s" % (e.name, where))
    elif isinstance(e, Pre):
        if e.name not in p.vars:
            raise UndeclaredVariable("undeclared variable %r in %s" % (e.name, where))
    elif isinstance(e, Pair):
        for x in e.items:
            _validate_expr(p, x, where)
    elif isinstance(e, Func):
        if e.name == IF_FUNC:
            if len(e.args) != 3:
                raise MalformedSystem("if expression needs 3 parts in %s" % where)
        else:
            decl = p.funcs.get(e.name)
            if decl is None:
                raise UndeclaredVariable(
                    "undeclared function %r in %s" % (e.name, where)
                )
            if len(e.args) != len(decl.in_domains):
                raise DomainMismatch(
                    "function %r takes %d arguments, got %d in %s"
                    % (e.name, len(decl.in_domains), len(e.args), where)
                )
        for x in e.args:
            _validate_expr(p, x, where)


def _validate_body(p):
    inits = {}
    for s in statements(p.body):
        if isinstance(s, SObserve):
            if s.var not in p.vars:
                raise UndeclaredVariable("observe of undeclared variable %r" % s.var)
        elif isinstance(s, SInit):
            if s.var not in p.vars:
                raise UndeclaredVariable("init of undeclared variable %r" % s.var)
            if s.value not in p.domain_values(s.var):
                raise DomainMismatch(
                    "init %s = %r falls outside its domain" % (s.var, s.value)
                )
            if s.var in inits and inits[s.var] != s.value:
                raise MalformedSystem("conflicting init values for %r" % s.var)
            inits[s.var] = s.value
        elif isinstance(s, SPrior):
            if s.var not in p.vars:
                raise UndeclaredVariable("prior for undeclared variable %r" % s.var)
            if s.dist == "Uniform":
                if not isinstance(s.arg, VarRef) or s.arg.name not in p.domains:
                    raise DomainMismatch(
                        "Uniform takes a domain name, in prior for %r" % s.var
                    )
            elif s.arg is not None:
                _validate_expr(p, s.arg, "prior for %r" % s.var)
        elif isinstance(s, SEq):
            _validate_expr(p, s.lhs, "equation")
            _validate_expr(p, s.rhs, "equation")
        elif isinstance(s, SOn):
            _validate_expr(p, s.guard, "guard")
            for branch in (s.then, s.els):
                for leaf in statements(branch):
                    if isinstance(leaf, SOn):
                        raise MalformedSystem(
                            "on-statements do not nest inside branches"
                        )
                    if isinstance(leaf, SInit):
                        raise MalformedSystem("init must sit at the top level")
            _validate_body_part(p, s.then)
            _validate_body_part(p, s.els)
        else:
            raise MalformedSystem("unexpected statement %r" % (s,))


def _validate_body_part(p, body):
    saved = p.body
    p.body = body
    try:
        _validate_body(p)
    finally:
        p.body = saved


# --- printer -------------------------------------------------------------------


def print_value(v):
    if isinstance(v, bool):
        return "T" if v else "F"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return "%d/%d" % (v.numerator, v.denominator)
    return '"%s"' % v


def print_key(k):
    if isinstance(k, tuple):
        return "(%s)" % ", ".join(print_value(v) for v in k)
    return print_value(k)


def print_expr(e):
    if isinstance(e, Const):
        return print_value(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Pre):
        return "pre %s" % e.name
    if isinstance(e, Pair):
        return "(%s)" % ", ".join(print_expr(x) for x in e.items)
    if isinstance(e, Func):
        if e.name == IF_FUNC and len(e.args) == 3:
            return "if %s then %s else %s" % tuple(print_expr(x) for x in e.args)
        return "%s(%s)" % (e.name, ", ".join(print_expr(x) for x in e.args))
    raise MalformedSystem("not an expression: %r" % (e,))


def print_stmt(s):
    if isinstance(s, SObserve):
        return "observe %s" % s.var
    if isinstance(s, SInit):
        return "init %s = %s" % (s.var, print_value(s.value))
    if isinstance(s, SPrior):
        if s.arg is None:
            return "%s ~ %s" % (s.var, s.dist)
        return "%s ~ %s(%s)" % (s.var, s.dist, print_expr(s.arg))
    if isinstance(s, SEq):
        return "%s = %s" % (print_expr(s.lhs), print_expr(s.rhs))
    if isinstance(s, SOn):
        return "on %s then %s else %s" % (
            print_expr(s.guard),
            _print_branch(s.then),
            _print_branch(s.els),
        )
    if isinstance(s, SPar):
        return "{ %s }" % " || ".join(print_stmt(x) for x in s.items)
    raise MalformedSystem("not a statement: %r" % (s,))


def _print_branch(s):
    if isinstance(s, SPar):
        return print_stmt(s)
    return "{ %s }" % print_stmt(s)


def print_program(p: Program) -> str:
    lines = []
    for name, vals in p.domains.items():
        lines.append("domain %s = { %s }" % (name, ", ".join(print_value(v) for v in vals)))
    for name, dom in p.vars.items():
        lines.append("var %s : %s" % (name, dom))
    for f in p.funcs.values():
        sig = f.in_domains[0] if len(f.in_domains) == 1 else "(%s)" % ", ".join(f.in_domains)
        rows = ", ".join(
            "%s -> %s" % (print_key(k), print_value(v))
            for k, v in sorted(f.table.items(), key=lambda kv: repr(kv[0]))
        )
        lines.append("%s %s : %s -> %s { %s }" % (f.kind, f.name, sig, f.out_domain, rows))
    for d in p.dists.values():
        if d.param_domain is None:
            rows = ", ".join(
                "%s : %s" % (print_value(v), print_value(pr))
                for v, pr in sorted(d.table.items(), key=lambda kv: repr(kv[0]))
            )
            lines.append("dist %s : %s { %s }" % (d.name, d.target_domain, rows))
        else:
            cells = []
            for key, rows in sorted(d.table.items(), key=lambda kv: repr(kv[0])):
                body = ", ".join(
                    "%s : %s" % (print_value(v), print_value(pr))
                    for v, pr in sorted(rows.items(), key=lambda kv: repr(kv[0]))
                )
                cells.append("%s -> { %s }" % (print_key(key), body))
            lines.append(
                "dist %s(%s) : %s { %s }"
                % (d.name, d.param_domain, d.target_domain, ", ".join(cells))
            )
    if p.body is not None:
        if lines:
            lines.append("")
        items = p.body.items if isinstance(p.body, SPar) else (p.body,)
        for s in items:
            lines.append("|| %s" % print_stmt(s))
    return "\n".join(lines) + "\n"
