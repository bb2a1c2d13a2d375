"""Mission logic: a small LTL fragment, the patrol automaton family, and
accepting-run (lasso) extraction.

Concrete syntax: `[]` always, `<>` eventually, `U` until, `&&`, `||`, `!`,
parentheses, and identifiers for atomic propositions. Precedence from loose
to tight: `||` < `&&` < `U` < unary.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

Symbol = frozenset  # a letter of the automaton alphabet: a set of AP names


class LTLSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnsupportedFragment(ValueError):
    pass


class NoAcceptingRun(RuntimeError):
    pass


class EmptyLiveness(ValueError):
    pass


# -- formulas --------------------------------------------------------------------


@dataclass(frozen=True)
class AP:
    name: str


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    child: "Formula"


@dataclass(frozen=True)
class Eventually:
    child: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


Formula = AP | Not | And | Or | Always | Eventually | Until


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        two = text[i : i + 2]
        if two in ("[]", "<>", "&&", "||"):
            tokens.append((two, two, i))
            i += 2
            continue
        if c in "()!":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(("U" if word == "U" else "name", word, i))
            i = j
            continue
        raise LTLSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", len(text)))
    return tokens


def parse_ltl(text: str) -> Formula:
    """Parse the concrete syntax into a formula tree."""
    if not text.strip():
        raise LTLSyntaxError("empty formula", 0)
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos]

    def take(kind):
        nonlocal pos
        tok = tokens[pos]
        if tok[0] != kind:
            raise LTLSyntaxError(f"expected {kind}, found {tok[1] or 'end of input'!r}", tok[2])
        pos += 1
        return tok

    def parse_or():
        node = parse_and()
        while peek()[0] == "||":
            take("||")
            node = Or(node, parse_and())
        return node

    def parse_and():
        node = parse_until()
        while peek()[0] == "&&":
            take("&&")
            node = And(node, parse_until())
        return node

    def parse_until():
        node = parse_unary()
        if peek()[0] == "U":
            take("U")
            return Until(node, parse_until())
        return node

    def parse_unary():
        kind, _, at = peek()
        if kind == "!":
            take("!")
            return Not(parse_unary())
        if kind == "[]":
            take("[]")
            return Always(parse_unary())
        if kind == "<>":
            take("<>")
            return Eventually(parse_unary())
        if kind == "(":
            take("(")
            node = parse_or()
            take(")")
            return node
        if kind == "name":
            return AP(take("name")[1])
        raise LTLSyntaxError(f"expected a formula, found {peek()[1] or 'end of input'!r}", at)

    node = parse_or()
    take("end")
    return node


def format_ltl(f: Formula) -> str:
    """Render with minimal parentheses; parse_ltl(format_ltl(f)) == f."""

    def prec(node) -> int:
        if isinstance(node, (AP,)):
            return 4
        if isinstance(node, (Not, Always, Eventually)):
            return 3
        if isinstance(node, Until):
            return 2
        if isinstance(node, And):
            return 1
        return 0

    def render(node, min_prec: int) -> str:
        p = prec(node)
        if isinstance(node, AP):
            s = node.name
        elif isinstance(node, Not):
            s = "!" + render(node.child, 3)
        elif isinstance(node, Always):
            s = "[]" + render(node.child, 3)
        elif isinstance(node, Eventually):
            s = "<>" + render(node.child, 3)
        elif isinstance(node, Until):
            s = f"{render(node.left, 3)} U {render(node.right, 2)}"
        elif isinstance(node, And):
            s = f"{render(node.left, 1)} && {render(node.right, 2)}"
        else:
            s = f"{render(node.left, 0)} || {render(node.right, 1)}"
        return f"({s})" if p < min_prec else s

    return render(f, 0)


# -- automata --------------------------------------------------------------------


def _symbol_key(sym: Symbol):
    return tuple(sorted(sym))


@dataclass(frozen=True)
class BuchiAutomaton:
    states: tuple[str, ...]
    ap: frozenset[str]
    transitions: dict  # (state, Symbol) -> frozenset of successor states
    initial: frozenset[str]
    accepting: frozenset[str]

    def __post_init__(self):
        if not self.initial or not self.initial <= set(self.states):
            raise ValueError("initial states must be a nonempty subset of the states")
        if not self.accepting or not self.accepting <= set(self.states):
            raise ValueError("accept states must be a nonempty subset of the states")
        for (s, sym), targets in self.transitions.items():
            if s not in self.states or not targets <= set(self.states):
                raise ValueError("transitions must stay within the state set")
            if not sym <= self.ap:
                raise ValueError(f"label {set(sym)} uses unknown propositions")

    def step(self, states: frozenset[str], symbol: Symbol) -> frozenset[str]:
        out = set()
        for s in states:
            out |= self.transitions.get((s, frozenset(symbol)), frozenset())
        return frozenset(out)

    def edges_from(self, state: str) -> list[tuple[Symbol, str]]:
        """Deterministically ordered outgoing edges."""
        out = []
        for (s, sym), targets in self.transitions.items():
            if s == state:
                for t in sorted(targets):
                    out.append((sym, t))
        out.sort(key=lambda e: (_symbol_key(e[0]), e[1]))
        return out

    def accepts_word(self, word: list[Symbol]) -> bool:
        """Finite check: can the whole word be consumed from an initial state?"""
        states = self.initial
        for sym in word:
            states = self.step(states, sym)
            if not states:
                return False
        return True


@dataclass(frozen=True)
class AcceptingRun:
    """Lasso: prefix then cycle, as (state, symbol-consumed-on-exit) pairs.

    The last prefix pair is the cycle anchor (same state and symbol as
    cycle[0]); the infinite word is prefix[:-1] labels followed by the cycle
    labels repeated.
    """

    prefix: tuple[tuple[str, Symbol], ...]
    cycle: tuple[tuple[str, Symbol], ...]

    def word(self, n_cycles: int = 1) -> list[Symbol]:
        return [sym for _, sym in self.prefix[:-1]] + list(
            sym for _, sym in self.cycle
        ) * n_cycles

    def validate(self, automaton: BuchiAutomaton):
        if self.prefix[-1] != self.cycle[0]:
            raise ValueError("prefix must end at the cycle anchor")
        if not any(s in automaton.accepting for s, _ in self.cycle):
            raise ValueError("cycle visits no accept state")
        state = self.prefix[0][0]
        if state not in automaton.initial:
            raise ValueError("run does not start in an initial state")
        path = list(self.prefix[:-1]) + list(self.cycle)
        for (s, sym), (nxt, _) in zip(path, path[1:] + [self.cycle[0]]):
            if nxt not in automaton.transitions.get((s, frozenset(sym)), frozenset()):
                raise ValueError(f"invalid transition {s} --{set(sym)}--> {nxt}")


def build_patrol_automaton(
    liveness_regions: list[str],
    init_region: str,
    safe_label: str = "free",
) -> BuchiAutomaton:
    """The 2m-state cyclic automaton alternating region visits with safe
    transit: it recognizes exactly the patrol word a_0, safe, a_1, safe, ...
    repeated forever. The accept state sits after the second region visit
    (s3), or s1 for the degenerate single-region patrol."""
    m = len(liveness_regions)
    if m == 0:
        raise EmptyLiveness("need at least one liveness region")
    if liveness_regions[0] != init_region:
        raise ValueError("init_region must be the first liveness region")
    states = tuple(f"s{i}" for i in range(2 * m))
    trans: dict = {}
    for i, region in enumerate(liveness_regions):
        trans[(states[2 * i], frozenset({region}))] = frozenset({states[2 * i + 1]})
        trans[(states[2 * i + 1], frozenset({safe_label}))] = frozenset({states[(2 * i + 2) % (2 * m)]})
    accept = states[3] if m >= 2 else states[1]
    return BuchiAutomaton(
        states=states,
        ap=frozenset(liveness_regions) | {safe_label},
        transitions=trans,
        initial=frozenset({states[0]}),
        accepting=frozenset({accept}),
    )


def recognize_patrol(formula: Formula, safe_label: str | None = None) -> tuple[list[str], str, str]:
    """Match a formula against the patrol template

        init && [](<> a_0) && ... && [](safe U (a_0 || ... || a_{m-1}))

    returning (liveness order, init region, safe label). Anything else raises
    UnsupportedFragment."""

    def flatten_and(f):
        if isinstance(f, And):
            return flatten_and(f.left) + flatten_and(f.right)
        return [f]

    def flatten_or(f):
        if isinstance(f, Or):
            return flatten_or(f.left) + flatten_or(f.right)
        return [f]

    init = None
    liveness: list[str] = []
    safety = None
    for part in flatten_and(formula):
        if isinstance(part, AP):
            if init is not None:
                raise UnsupportedFragment("multiple initial-region conjuncts")
            init = part.name
        elif isinstance(part, Always) and isinstance(part.child, Eventually) and isinstance(part.child.child, AP):
            liveness.append(part.child.child.name)
        elif isinstance(part, Always) and isinstance(part.child, Until):
            if safety is not None:
                raise UnsupportedFragment("multiple safety conjuncts")
            safety = part.child
        else:
            raise UnsupportedFragment(f"conjunct outside the patrol template: {format_ltl(part)}")
    if init is None or safety is None or not liveness:
        raise UnsupportedFragment("patrol template needs init, liveness, and safety conjuncts")
    if not isinstance(safety.left, AP):
        raise UnsupportedFragment("safety conjunct must hold a plain safe label")
    disjuncts = flatten_or(safety.right)
    if not all(isinstance(dj, AP) for dj in disjuncts):
        raise UnsupportedFragment("safety disjunction must contain plain regions")
    if {dj.name for dj in disjuncts} != set(liveness):
        raise UnsupportedFragment("safety disjunction must cover exactly the liveness regions")
    if len(set(liveness)) != len(liveness):
        raise UnsupportedFragment("repeated liveness region")
    if liveness[0] != init:
        raise UnsupportedFragment("initial region must be the first liveness region")
    if safe_label is not None and safety.left.name != safe_label:
        raise UnsupportedFragment(f"safe label must be {safe_label!r}")
    return liveness, init, safety.left.name


def find_accepting_run(automaton: BuchiAutomaton) -> AcceptingRun:
    """Shortest lasso by breadth-first search: first to some accept state,
    then the shortest cycle back to it. Deterministic via sorted state and
    label orderings."""

    def bfs(sources: list[str], min_edges: int, target_test):
        # returns (target, path) where path = [(state, symbol), ...] consumed;
        # states are tracked as (name, moved-at-least-once) so that cycle
        # searches require >= 1 edge even when source == target
        seen = {}
        queue = deque()
        for s in sources:
            seen[(s, 0)] = None
            queue.append((s, 0))
        while queue:
            state, moved = queue.popleft()
            if moved >= min_edges and target_test(state):
                path = []
                cur = (state, moved)
                while seen[cur] is not None:
                    prev, sym = seen[cur]
                    path.append((prev[0], sym))
                    cur = prev
                return state, path[::-1]
            for sym, nxt in automaton.edges_from(state):
                key = (nxt, 1)
                if key not in seen:
                    seen[key] = ((state, moved), sym)
                    queue.append(key)
        return None, None

    best = None
    for accept in sorted(automaton.accepting):
        target, prefix_path = bfs(sorted(automaton.initial), 0, lambda s: s == accept)
        if target is None:
            continue
        _, cycle_path = bfs([accept], 1, lambda s: s == accept)
        if cycle_path is None:
            continue
        total = len(prefix_path) + len(cycle_path)
        if best is None or total < best[0]:
            best = (total, accept, prefix_path, cycle_path)
    if best is None:
        raise NoAcceptingRun("no reachable accept state lies on a cycle")
    _, accept, prefix_path, cycle_path = best
    cycle = tuple((s, sym) for s, sym in cycle_path)
    prefix = tuple(prefix_path) + (cycle[0],)
    run = AcceptingRun(prefix=prefix, cycle=cycle)
    run.validate(automaton)
    return run


def run_to_transitions(run: AcceptingRun, safe_label: str = "free") -> list[tuple[str, str]]:
    """Planner requests: consecutive region visits along one full cycle of
    the accepting run, starting from the run's first region."""

    def regions_of(pairs):
        out = []
        for _, sym in pairs:
            names = sorted(sym - {safe_label})
            if names:
                out.append(names[0])
        return out

    cycle_regions = regions_of(run.cycle)
    n_requests = max(len(set(cycle_regions)), 1)
    seq = regions_of(run.prefix[:-1]) + cycle_regions * 2
    return [(seq[k], seq[k + 1]) for k in range(n_requests)]


# -- serialization ---------------------------------------------------------------


def automaton_to_json(a: BuchiAutomaton) -> dict:
    return {
        "states": list(a.states),
        "ap": sorted(a.ap),
        "initial": sorted(a.initial),
        "accepting": sorted(a.accepting),
        "transitions": [
            {"from": s, "label": sorted(sym), "to": sorted(targets)}
            for (s, sym), targets in sorted(
                a.transitions.items(), key=lambda kv: (kv[0][0], _symbol_key(kv[0][1]))
            )
        ],
    }


def automaton_from_json(d: dict) -> BuchiAutomaton:
    trans = {}
    for e in d["transitions"]:
        trans[(e["from"], frozenset(e["label"]))] = frozenset(e["to"])
    return BuchiAutomaton(
        states=tuple(d["states"]),
        ap=frozenset(d["ap"]),
        transitions=trans,
        initial=frozenset(d["initial"]),
        accepting=frozenset(d["accepting"]),
    )
