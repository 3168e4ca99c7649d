import random

import pytest

from rowsub import infer_type
from rowsub.coalesce import coalesce, print_type, raw_type
from rowsub.core import (
    ABS,
    INT,
    AbsField,
    FieldVariable,
    FunType,
    Pre,
    RecType,
    RowCons,
    RowEmpty,
    RowVariable,
    Scheme,
    TypeVariable,
    normalize_row,
)
from rowsub.infer import Engine, MissingField, NotASubtype, UnboundVariable
from rowsub.syntax import parse

from termgen import gen_term


def rec(*fields, tail=None):
    row = tail if tail is not None else RowEmpty()
    for label, field in reversed(fields):
        row = RowCons(label, field, row)
    return RecType(row)


def show(t):
    return print_type(raw_type(t))


# -- typeTerm ---------------------------------------------------------------


def test_extend_under_variable_env():
    eng = Engine()
    alpha = eng.supply.type_var(0)
    t = eng.type_term(parse("r with {y = 1}"), {"r": alpha}, 0)
    (upper,) = alpha.upper_bounds
    fields, tail = normalize_row(upper.row)
    assert isinstance(fields["y"], FieldVariable) and isinstance(tail, RowVariable)
    res_fields, res_tail = normalize_row(t.row)
    assert res_fields == {"y": Pre(INT)} and res_tail is tail


def test_literals_and_records():
    eng = Engine()
    assert eng.type_term(parse("42"), {}, 0) == INT
    assert eng.type_term(parse("{x = 1}"), {}, 0) == RecType(RowCons("x", Pre(INT), RowEmpty()))


def test_unbound_variable():
    with pytest.raises(UnboundVariable) as info:
        Engine().infer(parse("y"))
    assert "y" in str(info.value)


# -- constrain --------------------------------------------------------------


def test_constrain_var_records_upper_bound():
    eng = Engine()
    alpha = eng.supply.type_var(0)
    theta, rho = eng.supply.field_var(0), eng.supply.row_var(0)
    target = rec(("y", theta), tail=rho)
    eng.constrain(alpha, target)
    assert alpha.upper_bounds == [target]


def test_constrain_base_cases():
    eng = Engine()
    eng.constrain(INT, INT)
    with pytest.raises(NotASubtype):
        eng.constrain(INT, rec(("x", Pre(INT))))
    with pytest.raises(NotASubtype):
        eng.constrain(FunType(INT, INT), INT)


def test_constrain_function_splits_into_domain_and_codomain():
    # the application step of the running example, checked through the trace
    events = []
    eng = Engine(events.append)
    sup = eng.supply
    alpha, beta = sup.type_var(0), sup.type_var(0)
    rho = sup.row_var(0)
    fn = FunType(alpha, rec(("y", Pre(INT)), tail=rho))
    arg = rec(("x", Pre(INT)))
    eng.constrain(fn, FunType(arg, beta))
    lines = [(e.depth, e.args) for e in events if e.kind == "constrain"]
    assert lines[0] == (0, ("'a -> {y: int ; 'r0}", "{x: int} -> 'b"))
    assert lines[1] == (1, ("{x: int}", "'a"))
    assert lines[2] == (1, ("{y: int ; 'r0}", "'b"))


def test_constrain_row_expands_missing_label():
    eng = Engine()
    sup = eng.supply
    theta, rho = sup.field_var(0), sup.row_var(0)
    eng.constrain(rec(("x", Pre(INT))), rec(("y", theta), tail=rho))
    assert rho.expansion is not None
    label, gamma, rho2 = rho.expansion
    assert label == "x"
    assert gamma.lower_bounds == [Pre(INT)]
    assert theta.lower_bounds == [ABS]
    assert rho2.lower_bounds == [RowEmpty()]


def test_constrain_row_second_expansion():
    # lines 19-21 of the worked example: the projection row gains y
    eng = Engine()
    sup = eng.supply
    gamma, delta = sup.field_var(0), sup.type_var(0)
    rho1, rho2 = sup.row_var(0), sup.row_var(0)
    gamma.lower_bounds.append(Pre(INT))
    lhs = rec(("y", Pre(INT)), ("x", gamma), tail=rho1)
    eng.constrain(lhs, rec(("x", Pre(delta)), tail=rho2))
    assert rho2.expansion[0] == "y"
    assert gamma.upper_bounds == [Pre(delta)]
    assert delta.lower_bounds == [INT]


def test_constrain_empty_rows():
    Engine().constrain(rec(), rec())


def test_constrain_field_cases():
    eng = Engine()
    eng.constrain_field(Pre(INT), ABS)
    theta = eng.supply.field_var(0)
    eng.constrain_field(ABS, theta)
    assert theta.lower_bounds == [ABS]
    with pytest.raises(MissingField) as info:
        eng.constrain_field(ABS, Pre(INT), "z")
    assert info.value.label == "z"
    # Abs flowing into a variable later required to be present
    with pytest.raises(MissingField):
        eng.constrain_field(theta, Pre(INT), "q")


def test_width_and_depth():
    eng = Engine()
    eng.constrain(rec(("x", Pre(INT)), ("y", Pre(INT))), rec(("x", Pre(INT))))
    with pytest.raises(MissingField):
        eng.constrain(rec(("x", Pre(INT))), rec(("x", Pre(INT)), ("y", Pre(INT))))
    with pytest.raises(NotASubtype):
        eng.constrain(rec(("x", Pre(INT))), rec(("x", Pre(rec()))))


# -- expand -----------------------------------------------------------------


def test_expand_is_single_assignment():
    eng = Engine()
    rho = eng.supply.row_var(0)
    first = eng.expand(rho, "x")
    assert eng.expand(rho, "x") == first
    fields, tail = normalize_row(rho)
    assert fields == {"x": first[0]} and tail is first[1]


def test_expand_chains_through_existing_expansion():
    eng = Engine()
    rho = eng.supply.row_var(0)
    delta_f, rest = eng.expand(rho, "x")
    eps, rest2 = eng.expand(rho, "y")
    assert rest.expansion == ("y", eps, rest2)
    fields, tail = normalize_row(rho)
    assert list(fields) == ["x", "y"] and tail is rest2


def test_expand_replays_bounds():
    eng = Engine()
    rho, sigma = eng.supply.row_var(0), eng.supply.row_var(0)
    eng.constrain_row(rho, sigma)
    eng.constrain_row(RowEmpty(), rho)
    eng.expand(sigma, "x")
    # the link rho <= sigma forces rho to learn about x too
    assert rho.expansion is not None and rho.expansion[0] == "x"
    assert rho.expansion[1].lower_bounds == [ABS]


# -- let-polymorphism -------------------------------------------------------


def test_instantiate_copies_generic_variables():
    eng = Engine()
    ty = eng.type_term(parse("fun x -> x"), {}, 1)
    scheme = eng.generalize(ty, 0)
    a, b = eng.instantiate(scheme, 0), eng.instantiate(scheme, 0)
    assert a.domain is a.codomain and b.domain is b.codomain
    assert a.domain is not b.domain
    assert a.domain is not ty.domain


def test_instantiate_shares_outer_variables():
    eng = Engine()
    outer = eng.supply.type_var(0)
    inner = eng.supply.type_var(1)
    scheme = Scheme(FunType(outer, inner), 0)
    a, b = eng.instantiate(scheme, 0), eng.instantiate(scheme, 0)
    assert a.domain is outer and b.domain is outer
    assert a.codomain is not b.codomain


def test_instantiate_copies_rows_and_fields():
    eng = Engine()
    ty = eng.type_term(parse("fun r -> r with {y = 1}"), {}, 1)
    scheme = eng.generalize(ty, 0)
    copy = eng.instantiate(scheme, 0)
    _, t_orig = normalize_row(ty.codomain.row)
    _, t_copy = normalize_row(copy.codomain.row)
    assert t_copy is not t_orig and t_copy.level == 0


def test_polymorphic_identity():
    # Hand derivation: id : 'a -> 'a generalised at level 0; each use copies
    # 'a, so `id 1` gives int and `id {x = 2}` gives {x: int} independently.
    assert infer_type("let rec id = fun x -> x in {a = id 1, b = id {x = 2}}") == (
        "{a: int, b: {x: int}}"
    )


def test_let_rec_is_recursive():
    assert infer_type("let rec f = fun x -> f x in f") == "top -> bot"
    # one unrolling of the recursive record type
    assert infer_type("let rec r = {self = r} in r.self") == "{self: mu 'a. {self: 'a}}"


def test_extrusion_keeps_lambda_bound_variables_monomorphic():
    # y is lambda-bound, so f must not be able to use it at two types
    assert infer_type("fun y -> let rec f = fun x -> y x in f 1") == "(int -> 'a) -> 'a"
    with pytest.raises(NotASubtype):
        infer_type("(fun y -> let rec f = fun x -> y x in f 1) (fun z -> z.a)")
    # both uses of f feed the single, shared domain of y; each use keeps its
    # own result variable, both bounded by y's result
    assert infer_type("fun y -> let rec f = fun x -> y x in {a = f 1, b = f {}}") == (
        "(int \\/ {} -> 'a /\\ 'b) -> {a: 'a, b: 'b}"
    )


def test_extension_overwrites():
    assert infer_type("{x = 1} with {x = {}}") == "{x: {}}"
    assert infer_type("fun r -> (r with {a = 1}) with {a = {}}") == "{a: 'f0 ; 'r0} -> {a: {} ; 'r0}"


# -- invariants -------------------------------------------------------------


def _all_vars(*roots):
    seen, stack, out = set(), list(roots), []

    def push_row(r):
        fields, tail = normalize_row(r)
        stack.extend(fields.values())
        stack.append(tail)

    while stack:
        x = stack.pop()
        if isinstance(x, FunType):
            stack += [x.domain, x.codomain]
        elif isinstance(x, RecType):
            push_row(x.row)
        elif isinstance(x, Pre):
            stack.append(x.type)
        elif isinstance(x, RowCons):
            push_row(x)
        elif isinstance(x, (TypeVariable, RowVariable, FieldVariable)):
            if id(x) in seen:
                continue
            seen.add(id(x))
            out.append(x)
            stack += x.lower_bounds + x.upper_bounds
            if isinstance(x, RowVariable) and x.expansion:
                stack += [x.expansion[1], x.expansion[2]]
    return out


class RecordingEngine(Engine):
    """Logs every pair handed to the solver, cached or not."""

    def __init__(self):
        super().__init__()
        self.seen = set()
        self.inherited = set()

    def instantiate(self, scheme, lvl):
        # copies start out with their original's (already checked) bound pairs
        t = super().instantiate(scheme, lvl)
        for v in _all_vars(t):
            for lo in v.lower_bounds:
                for up in v.upper_bounds:
                    self.inherited.add((id(lo), id(up)))
        return t

    def _constrain(self, lhs, rhs):
        self.seen.add((id(lhs), id(rhs)))
        super()._constrain(lhs, rhs)

    def _constrain_row(self, r1, r2):
        self.seen.add((id(r1), id(r2)))
        super()._constrain_row(r1, r2)

    def _constrain_field(self, f1, f2, label):
        self.seen.add((id(f1), id(f2)))
        super()._constrain_field(f1, f2, label)


PROGRAMS = [
    "((fun r -> r with {y = 1}) {x = 1}).x",
    "fun r -> r with {y = 1}",
    "let rec id = fun x -> x in {a = id 1, b = id {x = 2}}",
    "fun f -> fun r -> (f (r with {a = 1})).b",
    "let rec loop = fun r -> loop (r with {n = r.n}) in loop",
    "fun r -> {p = r.a, q = (r with {c = r.b}).c}",
]


@pytest.mark.parametrize("source", PROGRAMS)
def test_bound_discipline(source):
    eng = RecordingEngine()
    t = eng.infer(parse(source))
    for v in _all_vars(t):
        for lo in v.lower_bounds:
            for up in v.upper_bounds:
                if lo is up or (id(lo), id(up)) in eng.inherited:
                    continue
                # either the pair itself or (for rows) its normalized view went through
                assert (id(lo), id(up)) in eng.seen, (v, lo, up)


def test_termination_on_cyclic_bounds():
    eng = Engine()
    a, b = eng.supply.type_var(0), eng.supply.type_var(0)
    eng.constrain(a, b)
    eng.constrain(b, a)
    eng.constrain(FunType(a, a), a)
    eng.constrain(a, FunType(b, b))
    rho, sigma = eng.supply.row_var(0), eng.supply.row_var(0)
    c = eng.supply.type_var(0)
    eng.constrain(RecType(RowCons("x", Pre(c), rho)), c)
    eng.constrain(c, RecType(RowCons("y", Pre(c), sigma)))
    eng.constrain_row(sigma, rho)
    eng.constrain_row(rho, sigma)
    assert rho.expansion is not None and sigma.expansion is not None


def test_self_referential_rows_terminate():
    for src in [
        "let rec f = fun r -> f (r with {a = r}) in f",
        "let rec f = fun r -> (f r.a) with {b = f r} in f",
        "fun r -> (r with {a = r}).a.a.b",
    ]:
        infer_type(src)


def _alpha_rename(t, mapping, counter):
    from rowsub import syntax as s

    if isinstance(t, s.Var):
        return s.Var(mapping.get(t.name, t.name))
    if isinstance(t, s.Lam):
        new = f"v{next(counter)}"
        return s.Lam(new, _alpha_rename(t.body, {**mapping, t.param: new}, counter))
    if isinstance(t, s.LetRec):
        new = f"v{next(counter)}"
        m = {**mapping, t.name: new}
        return s.LetRec(new, _alpha_rename(t.bound, m, counter), _alpha_rename(t.body, m, counter))
    if isinstance(t, s.App):
        return s.App(_alpha_rename(t.fn, mapping, counter), _alpha_rename(t.arg, mapping, counter))
    if isinstance(t, s.Record):
        return s.Record(tuple((l, _alpha_rename(v, mapping, counter)) for l, v in t.fields))
    if isinstance(t, s.Proj):
        return s.Proj(_alpha_rename(t.subject, mapping, counter), t.label)
    if isinstance(t, s.Extend):
        return s.Extend(
            _alpha_rename(t.subject, mapping, counter), t.label, _alpha_rename(t.value, mapping, counter)
        )
    return t


def test_determinism_under_alpha_renaming():
    import itertools

    from rowsub.infer import TypingError

    rng = random.Random(7)
    checked = 0
    while checked < 200:
        t = gen_term(rng, 5)
        try:
            expected = print_type(coalesce(Engine().infer(t)))
        except TypingError:
            continue
        renamed = _alpha_rename(t, {}, itertools.count())
        assert print_type(coalesce(Engine().infer(renamed))) == expected
        checked += 1
