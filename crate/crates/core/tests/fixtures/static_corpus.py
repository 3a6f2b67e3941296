from typing import Dict, Generator, List, Optional, Set, Tuple, Union


def arith() -> float:
    a: int = 1 + 2
    b: float = a * 1.5
    c: int = a // 2
    d: bool = True
    e: int = d + 1
    q: float = 3 / 2
    return b - c


def strings() -> str:
    s: str = "ab" * 2
    t: str = s + "c"
    u: str = "%s" % t
    return u.upper()


def compare() -> bool:
    x: bool = 1 < 2 < 3
    y: bool = "a" in "abc"
    return x and y


def unary() -> int:
    n: int = -5
    m: int = ~n
    f: float = -2.5
    b: bool = not n
    return m


def choose(flag: bool = False) -> Union[int, str]:
    v: Union[int, str] = 1 if flag else "one"
    return v


def containers() -> Dict[str, int]:
    xs: List[int] = [1, 2, 3]
    ys: Set[str] = {"a", "b"}
    pair: Tuple[int, str] = (1, "a")
    d: Dict[str, int] = {"a": 1}
    return d


def indexing() -> str:
    pair = (1, "a")
    first: int = pair[0]
    second: str = pair[1]
    xs = [1, 2, 3]
    head: int = xs[0]
    tail: List[int] = xs[1:]
    d = {"k": 2.0}
    val: float = d["k"]
    return second


def methods() -> List[str]:
    s = "a,b,c"
    parts: List[str] = s.split(",")
    joined: str = "-".join(parts)
    n: int = joined.count("-")
    return parts


def builtin_calls() -> int:
    xs = [1, 2]
    n: int = len(xs)
    s: str = str(n)
    f: float = float(s)
    return n + 1


def call_value() -> int:
    size = len
    n: int = size([1, 2])
    return n


def iteration() -> int:
    total: int = 0
    for x in [1, 2, 3]:
        total = total + x
    return total


def unpacking() -> str:
    a, b = 1, "x"
    c: str = b
    for i, name in enumerate(["p", "q"]):
        j: int = i
    return c


def comprehensions() -> Dict[str, int]:
    xs: List[int] = [i * 2 for i in [1, 2, 3]]
    ss: Set[str] = {str(i) for i in xs}
    g: Generator[int, None, None] = (i for i in xs)
    d: Dict[str, int] = {s: len(s) for s in ss}
    return d


def mutation() -> List[int]:
    xs = []
    xs.append(1)
    ys: List[int] = xs
    return ys


def dict_mutation() -> Dict[str, float]:
    d = {}
    d["a"] = 1.0
    return d


def walrus() -> int:
    if (n := 10) > 5:
        return n
    return 0


def gen() -> Generator[int, None, None]:
    yield 1
    yield 2


def augmented() -> int:
    n: int = 1
    n += 2
    return n


class Point:
    def __init__(self, x: int = 0, y: int = 0) -> None:
        self.x = x
        self.y = y

    def norm(self) -> int:
        return self.x * self.x + self.y * self.y


def make_point() -> Point:
    p: Point = Point(1, 2)
    return p


def attribute_use() -> int:
    p = Point(3, 4)
    return p.x


def linked() -> float:
    return helper(2)


def helper(v: int = 1) -> float:
    return v / 2


def narrowing(flag: bool = True) -> str:
    v = 1 if flag else "s"
    if isinstance(v, str):
        w: str = v
        return w
    return "none"


def optional_result(flag: bool = True) -> Optional[int]:
    if flag:
        return 1
    return None


def unforced(z: int) -> int:
    return z + 1


def attribute_read() -> int:
    n: int = 6
    d = n.denominator
    return n


def joined(flag: bool = True) -> Union[int, float]:
    if flag:
        r = 1
    else:
        r = 2.0
    out: Union[int, float] = r
    return out
