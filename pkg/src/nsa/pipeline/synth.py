"""Seeded generator of MiniLang corpora with learnable coding conventions.

The generated code follows three kinds of regularities:

* coordinate-style parameters always come in a canonical order (x before y,
  width before height, src before dst) and call sites respect that order;
* a variable's name prefix determines its type (count_/idx_ int, name_/msg_
  str, is_/has_ bool, ratio_ float, items_ list), literals agree with it,
  and docstrings describe return values in words;
* receivers are used with a small set of methods (board.mark_point,
  board.show_winner, canvas.draw_rect, ...), giving frequent local bigrams.

Every module is type-correct when fully annotated.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

PREFIXES = {
    "int": ("count", "idx"),
    "str": ("name", "msg"),
    "bool": ("is", "has"),
    "float": ("ratio",),
    "list": ("items",),
}
NOUNS = ("users", "rows", "files", "steps", "moves", "cells", "points", "tasks", "games", "turns")
VERBS = {
    "int": ("compute", "tally", "measure"),
    "str": ("format", "describe", "render"),
    "bool": ("check", "validate", "detect"),
    "float": ("average", "estimate", "scale"),
    "list": ("collect", "gather", "select"),
    "None": ("update", "reset", "store"),
}
RETURN_DOCS = {
    "int": ("Returns the number of {noun} found.", "Returns how many {noun} were counted as an integer."),
    "str": ("Returns the name of the {noun} as text.", "Returns a message describing the {noun}."),
    "bool": ("Returns whether the {noun} are valid.", "Returns true if any of the {noun} match."),
    "float": ("Returns the fraction of {noun} as a ratio.", "Returns the average share of {noun}."),
    "list": ("Returns the list of selected {noun}.", "Returns a list with all collected {noun}."),
    "None": ("Updates the {noun} in place.", "Stores the {noun} and does not return anything."),
}
ARG_VARIANTS = ("", "new_", "cur_", "pos_")


@dataclass
class Method:
    name: str
    params: tuple[tuple[str, str], ...]  # (name, type) without self
    returns: str
    body: tuple[str, ...]
    doc: str


@dataclass
class Theme:
    cls: str
    receiver: str
    methods: tuple[Method, ...]


THEMES = (
    Theme("Board", "board", (
        Method("mark_point", (("x", "int"), ("y", "int"), ("player_name", "str")), "bool", (
            "self.field[x][y] = player_name",
            "has_three_in_a_row = False",
            "if x == y:",
            "    has_three_in_a_row = True",
            "return has_three_in_a_row",
        ), "Marks the given point on the board as chosen by the given player. "
           "Returns whether the move gives the player three marked fields in a row."),
        Method("show_winner", (("player_name", "str"),), "None", (
            "self.winner = player_name",
        ), "Shows the name of the winning player."),
        Method("clear_point", (("x", "int"), ("y", "int")), "None", (
            "self.field[x][y] = None",
        ), "Clears the given point on the board."),
    )),
    Theme("Canvas", "canvas", (
        Method("draw_rect", (("x", "int"), ("y", "int"), ("width", "int"), ("height", "int")), "None", (
            "self.area = width * height",
            "self.origin = [x, y]",
        ), "Draws a rectangle with the given corner and size."),
        Method("resize", (("width", "int"), ("height", "int")), "bool", (
            "is_changed = width != height",
            "self.size = [width, height]",
            "return is_changed",
        ), "Resizes the canvas. Returns whether the shape changed."),
        Method("move_to", (("x", "int"), ("y", "int")), "None", (
            "self.pos = [x, y]",
        ), "Moves the cursor to the given point."),
    )),
    Theme("Link", "link", (
        Method("send_packet", (("src", "str"), ("dst", "str"), ("count_bytes", "int")), "bool", (
            "has_sent = count_bytes > 0",
            "self.route = [src, dst]",
            "return has_sent",
        ), "Sends a packet from the source to the destination. Returns whether it was sent."),
        Method("copy_file", (("src", "str"), ("dst", "str")), "None", (
            "self.last = dst",
            "self.first = src",
        ), "Copies a file from the source path to the destination path."),
        Method("connect", (("src", "str"), ("dst", "str")), "bool", (
            "is_open = src != dst",
            "return is_open",
        ), "Connects the two endpoints. Returns whether the link is open."),
    )),
)

# canonical coordinate pairs; argument variants share a prefix per call
COORD_PAIRS = (("x", "y"), ("width", "height"), ("src", "dst"))


def literal(rng: random.Random, typ: str) -> str:
    if typ == "int":
        return str(rng.randint(0, 9))
    if typ == "float":
        return rng.choice(("0.5", "1.5", "2.0", "0.25"))
    if typ == "str":
        return '"' + rng.choice(("alice", "bob", "data", "main", "left", "right")) + '"'
    if typ == "bool":
        return rng.choice(("True", "False"))
    if typ == "list":
        return "[" + ", ".join(str(rng.randint(0, 9)) for _ in range(rng.randint(0, 3))) + "]"
    return "None"


def var_name(rng: random.Random, typ: str, noun: str | None = None) -> str:
    return f"{rng.choice(PREFIXES[typ])}_{noun or rng.choice(NOUNS)}"


@dataclass
class Function:
    name: str
    params: list[tuple[str, str]]
    returns: str
    lines: list[str]


@dataclass
class ModuleBuilder:
    rng: random.Random
    annotate_fraction: float
    lines: list[str] = field(default_factory=list)

    def emit_def(self, name: str, params: list[tuple[str, str]], returns: str, doc: str,
                 body: list[str], indent: str, annotated: bool, method: bool) -> None:
        parts = ["self"] if method else []
        for p, t in params:
            parts.append(f"{p}: {t}" if annotated else p)
        ret = f" -> {returns}" if annotated else ""
        self.lines.append(f"{indent}def {name}({', '.join(parts)}){ret}:")
        self.lines.append(f'{indent}    """{doc}"""')
        self.lines.extend(f"{indent}    {line}" for line in body)


def typed_function(rng: random.Random, used: set[str]) -> Function:
    returns = rng.choice(("int", "str", "bool", "float", "list", "None"))
    noun = rng.choice(NOUNS)
    name = f"{rng.choice(VERBS[returns])}_{noun}"
    while name in used:
        noun = rng.choice(NOUNS)
        name = f"{rng.choice(VERBS[returns])}_{noun}"
    used.add(name)
    params: list[tuple[str, str]] = []
    taken = set()
    for _ in range(rng.randint(1, 3)):
        typ = rng.choice(("int", "int", "str", "str", "bool", "float", "list"))
        p = var_name(rng, typ)
        if p in taken:
            continue
        taken.add(p)
        params.append((p, typ))
    body: list[str] = []
    for p, typ in params:
        if typ == "int":
            body.append(f"idx_{rng.choice(NOUNS)} = {p} + {rng.randint(1, 5)}")
        elif typ == "str":
            body.append(f"msg_{rng.choice(NOUNS)} = {p}")
        elif typ == "bool":
            body += [f"if not {p}:", f"    is_{rng.choice(NOUNS)} = False"]
        elif typ == "float":
            body.append(f"ratio_{rng.choice(NOUNS)} = {p} * {literal(rng, 'float')}")
        else:
            body += [f"for item in {p}:", "    pass"]
    result = f"{rng.choice(PREFIXES[returns])}_result" if returns != "None" else None
    int_params = [p for p, t in params if t == "int"]
    if returns == "int":
        body.append(f"{result} = {int_params[0] if int_params else literal(rng, 'int')} * 2")
    elif returns == "bool":
        if int_params:
            body.append(f"{result} = {int_params[0]} > {rng.randint(0, 5)}")
        else:
            body.append(f"{result} = {literal(rng, 'bool')}")
    elif returns == "float":
        body.append(f"{result} = {rng.randint(1, 9)} / {rng.randint(2, 9)}")
    elif returns == "str":
        body.append(f"{result} = {literal(rng, 'str')}")
    elif returns == "list":
        body.append(f"{result} = [{', '.join(p for p, _ in params)}]")
    if result is not None:
        body.append(f"return {result}")
    elif rng.random() < 0.3:
        body.append("return")
    return Function(name, params, returns, body)


def call_args(rng: random.Random, params, coord_style: bool) -> tuple[list[str], list[str]]:
    """Argument names for a call plus the assignments that define them."""
    setup, args = [], []
    prefix = rng.choice(ARG_VARIANTS)
    for p, typ in params:
        if coord_style and any(p in pair for pair in COORD_PAIRS):
            arg = prefix + p
        elif rng.random() < 0.7:
            arg = p
        else:
            head = p.split("_", 1)[0]
            typed = any(head in prefixes for prefixes in PREFIXES.values())
            arg = f"{head}_{rng.choice(NOUNS)}" if typed else p
        if arg in args:
            arg = p
        setup.append(f"{arg} = {literal(rng, typ)}")
        args.append(arg)
    return setup, args


def generate_module(rng: random.Random, n_functions: int, annotate_fraction: float) -> tuple[str, int]:
    mb = ModuleBuilder(rng, annotate_fraction)
    theme = rng.choice(THEMES)
    n_methods = min(len(theme.methods), n_functions - 1) if n_functions > 1 else 0
    methods = list(theme.methods)
    if theme.cls != "Board":
        rng.shuffle(methods)
    # Board keeps mark_point and show_winner first so the game loop can be planted
    methods = methods[:n_methods]
    driver: list[str] = []
    if methods:
        mb.lines.append(f"class {theme.cls}:")
        for m in methods:
            mb.emit_def(m.name, list(m.params), m.returns, m.doc, list(m.body), "    ",
                        rng.random() < annotate_fraction, method=True)
            mb.lines.append("")
    used = {m.name for m in methods}
    funcs = [typed_function(rng, used) for _ in range(n_functions - len(methods))]
    for f in funcs:
        doc = rng.choice(RETURN_DOCS[f.returns]).format(noun=f.name.split("_", 1)[1])
        mb.emit_def(f.name, f.params, f.returns, doc, f.lines, "", rng.random() < annotate_fraction, method=False)
        mb.lines.append("")

    if methods:
        driver.append(f"{theme.receiver} = {theme.cls}()")
    names = {m.name for m in methods}
    if theme.cls == "Board" and {"mark_point", "show_winner"} <= names:
        driver += tictactoe_loop(rng)
    for m in methods:
        if theme.cls == "Board" and m.name in ("mark_point", "show_winner") and "show_winner" in names:
            continue
        for _ in range(rng.randint(2, 3)):
            setup, args = call_args(rng, m.params, coord_style=True)
            driver += setup
            call = f"{theme.receiver}.{m.name}({', '.join(args)})"
            driver.append(f"{rng.choice(PREFIXES[m.returns])}_{rng.choice(NOUNS)} = {call}"
                          if m.returns != "None" else call)
    for f in funcs:
        for _ in range(rng.randint(2, 3)):
            setup, args = call_args(rng, f.params, coord_style=False)
            driver += setup
            call = f"{f.name}({', '.join(args)})"
            driver.append(f"{rng.choice(PREFIXES[f.returns])}_{rng.choice(NOUNS)} = {call}"
                          if f.returns != "None" else call)
    mb.lines += driver
    return "\n".join(mb.lines).rstrip("\n") + "\n", len(methods) + len(funcs)


def tictactoe_loop(rng: random.Random) -> list[str]:
    xv, yv = rng.choice((("x", "y"), ("x", "y"), ("new_x", "new_y"), ("cur_x", "cur_y")))
    player = rng.choice(("active_player", "player_name", "name_player"))
    return [
        "game_done = False",
        "while not game_done:",
        f"    {player} = {literal(rng, 'str')}",
        f"    {xv} = {rng.randint(0, 2)}",
        f"    {yv} = {rng.randint(0, 2)}",
        f"    has_won = board.mark_point({xv}, {yv}, {player})",
        "    if has_won:",
        "        # notify player",
        "        game_done = True",
        f"        board.show_winner({player})",
    ]


def synth_sources(seed: int, n_functions: int, annotate_fraction: float = 0.5) -> dict[str, str]:
    """Relative path -> source for a deterministic corpus with ``n_functions`` functions."""
    if n_functions < 1:
        raise ValueError("n_functions must be at least 1")
    rng = random.Random(seed)
    files = {}
    remaining = n_functions
    i = 0
    while remaining > 0:
        count = min(remaining, rng.randint(4, 6))
        source, made = generate_module(rng, count, annotate_fraction)
        files[f"module_{i:04d}.mini"] = source
        remaining -= made
        i += 1
    return files


def write_corpus(files: dict[str, str], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for rel, text in sorted(files.items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
