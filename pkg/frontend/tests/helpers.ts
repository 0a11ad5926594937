/** Shared test utilities: DOM polling and a throwaway Storage. */

export async function waitFor<T>(
  probe: () => T | null | undefined | false,
  what = "condition",
  timeoutMs = 5_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const result = probe();
    if (result) return result;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

export async function waitForGone(
  probe: () => unknown,
  what = "element to disappear",
  timeoutMs = 5_000,
): Promise<void> {
  await waitFor(() => !probe(), what, timeoutMs);
}

export function memoryStorage(): Storage {
  const data = new Map<string, string>();
  return {
    get length() {
      return data.size;
    },
    clear: () => data.clear(),
    getItem: (key: string) => data.get(key) ?? null,
    key: (index: number) => [...data.keys()][index] ?? null,
    removeItem: (key: string) => void data.delete(key),
    setItem: (key: string, value: string) => void data.set(key, value),
  };
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.append(root);
  return root;
}

export function click(element: Element | null): void {
  if (!element) throw new Error("clicked a missing element");
  (element as HTMLElement).click();
}

export function type(textarea: Element | null, text: string): void {
  if (!textarea) throw new Error("typed into a missing element");
  (textarea as HTMLTextAreaElement).value = text;
  textarea.dispatchEvent(new Event("input", { bubbles: true }));
}
