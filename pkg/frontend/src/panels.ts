/** Chat panel plus per-robot VMR/Thought panels, rendered from the store. */
import type { SessionStore } from "./store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ChatPanel {
  private messagesEl: HTMLElement;
  private renderedCount = 0;

  constructor(container: HTMLElement, private readonly store: SessionStore) {
    this.messagesEl = el("div", "chat-messages");
    container.appendChild(this.messagesEl);
  }

  render(): void {
    const rows = this.store.chat.toArray();
    if (rows.length < this.renderedCount) {
      this.messagesEl.replaceChildren();
      this.renderedCount = 0;
    }
    for (const row of rows.slice(this.renderedCount)) {
      const entry = el("div", "chat-entry");
      entry.appendChild(el("span", "chat-tick", `t${row.tick}`));
      entry.appendChild(el("span", `chat-sender sender-${row.sender}`, row.sender));
      entry.appendChild(el("span", "chat-text", row.text));
      this.messagesEl.appendChild(entry);
    }
    this.renderedCount = rows.length;
    while (this.messagesEl.children.length > this.store.chat.capacity) {
      this.messagesEl.removeChild(this.messagesEl.firstChild!);
    }
    this.messagesEl.scrollTop = this.messagesEl.scrollHeight;
  }
}

export class RobotPanels {
  private built = false;

  constructor(private readonly container: HTMLElement, private readonly store: SessionStore) {}

  private buildOnce(): void {
    if (this.built || !this.store.snapshot) return;
    for (const robotId of this.store.robotIds()) {
      const section = el("section", "robot-panel");
      section.appendChild(el("h3", undefined, robotId));
      const vmr = el("div", "panel-list vmr-list");
      vmr.dataset.robot = robotId;
      const vmrTitle = el("h4", undefined, "VMRs (what it sees)");
      const thoughts = el("div", "panel-list thought-list");
      thoughts.dataset.robot = robotId;
      const thoughtTitle = el("h4", undefined, "Thoughts (why it acts)");
      section.append(vmrTitle, vmr, thoughtTitle, thoughts);
      this.container.appendChild(section);
    }
    this.built = true;
  }

  render(): void {
    this.buildOnce();
    if (!this.built) return;
    for (const robotId of this.store.robotIds()) {
      this.renderList(
        `.vmr-list[data-robot="${robotId}"]`,
        this.store.vmrPanel(robotId).toArray().map((row) => ({
          key: row.vmrId,
          text:
            `t${row.tick} ` +
            row.objects
              .map((o) => `${o.instanceId} (${(o.confidence * 100).toFixed(0)}%)`)
              .join(", "),
        })),
      );
      this.renderList(
        `.thought-list[data-robot="${robotId}"]`,
        this.store.thoughtPanel(robotId).toArray().map((row) => ({
          key: row.thoughtId,
          text: `t${row.tick} [${row.kind}] ${row.text}`,
        })),
      );
    }
  }

  private renderList(selector: string, rows: { key: string; text: string }[]): void {
    const list = this.container.querySelector<HTMLElement>(selector);
    if (!list) return;
    const have = list.childElementCount;
    if (rows.length < have) {
      list.replaceChildren();
    }
    for (const row of rows.slice(list.childElementCount)) {
      const item = el("div", "panel-row", row.text);
      item.dataset.key = row.key;
      list.appendChild(item);
    }
    while (list.childElementCount > rows.length) {
      list.removeChild(list.firstChild!);
    }
    list.scrollTop = list.scrollHeight;
  }
}
