class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n=0):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def add(self):
        i = len(self.parent)
        self.parent.append(i)
        self.size.append(1)
        self.components += 1
        return i

    def find(self, i):
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, a, b):
        """Merge the sets of a and b; return True if they were distinct."""
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.components -= 1
        return True


def count_components(n, edges) -> int:
    uf = UnionFind(n)
    for a, b in edges:
        uf.union(int(a), int(b))
    return uf.components
