"""
在由算子调用组成的小型 DAG 上做反向模式求导。

模型用 `leaf`（参数与输入）和 `apply`（`nn.layers` / `nn.lstm` 中的 forward/backward 对）
搭出前向图；`backward` 按逆拓扑序遍历，返回各具名叶子的梯度。
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from action_words.errors import GraphCycle

BackwardFn = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


@dataclass(eq=False)
class Node:
    value: np.ndarray
    parents: tuple[Node, ...] = ()
    backward_fn: BackwardFn | None = None
    name: str = ""
    grad: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return not self.parents


def leaf(name: str, value: np.ndarray) -> Node:
    return Node(value=value, name=name)


def apply(
    forward: Callable[..., tuple[Any, Any]],
    backward: Callable[[np.ndarray, Any], tuple[np.ndarray | None, ...]],
    *parents: Node,
    name: str = "",
    **kwargs: Any,
) -> Node:
    """用父节点的值调用 `forward`；节点保存 cache 供 `backward` 使用。"""
    out, cache = forward(*(p.value for p in parents), **kwargs)

    def _bw(g: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return backward(g, cache)

    return Node(value=out, parents=parents, backward_fn=_bw, name=name)


def topological_order(root: Node) -> list[Node]:
    """父节点在前。若某节点能到达自身则抛 GraphCycle。"""
    order: list[Node] = []
    state: dict[int, int] = {}  # 1 = 在栈上，2 = 已完成
    stack: list[tuple[Node, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        if i == 0:
            if state.get(id(node)) == 2:
                continue
            state[id(node)] = 1
        if i < len(node.parents):
            stack.append((node, i + 1))
            parent = node.parents[i]
            s = state.get(id(parent))
            if s == 1:
                raise GraphCycle(f"cycle through node '{parent.name or type(parent).__name__}'")
            if s is None:
                stack.append((parent, 0))
        else:
            state[id(node)] = 2
            order.append(node)
    return order


def backward(root: Node, upstream: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """
    把 d(root)/d(node) 累加到各节点的 `grad`，返回 {叶子名: 梯度}。
    root 不依赖的叶子不出现；无名叶子（如常量）跳过。
    """
    order = topological_order(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value) if upstream is None else np.asarray(upstream)
    for node in reversed(order):
        if node.grad is None or node.backward_fn is None:
            continue
        grads = node.backward_fn(node.grad)
        if len(grads) != len(node.parents):
            raise ValueError(f"node '{node.name}': {len(grads)} grads for {len(node.parents)} parents")
        for parent, g in zip(node.parents, grads):
            if g is None:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g
    return {n.name: n.grad for n in order if n.is_leaf and n.name and n.grad is not None}
