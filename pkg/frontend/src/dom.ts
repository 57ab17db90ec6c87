/** Tiny document-scoped element builder (each client owns its Document). */

export type Attrs = Record<string, string | number | boolean | ((ev: Event) => void)>;
export type Child = Node | string | null | undefined;

export function makeEl(doc: Document) {
  return function el(tag: string, attrs: Attrs = {}, ...children: Child[]): HTMLElement {
    const node = doc.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
      if (typeof value === "function") {
        node.addEventListener(key.replace(/^on/, ""), value as EventListener);
      } else if (typeof value === "boolean") {
        if (value) node.setAttribute(key, "");
        else node.removeAttribute(key);
        if (key === "disabled") (node as any).disabled = value;
      } else {
        node.setAttribute(key, String(value));
        if (key === "value") (node as any).value = String(value);
      }
    }
    for (const child of children) {
      if (child === null || child === undefined) continue;
      node.append(typeof child === "string" ? doc.createTextNode(child) : child);
    }
    return node;
  };
}

export type El = ReturnType<typeof makeEl>;
