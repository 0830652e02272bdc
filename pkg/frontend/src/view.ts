/** DOM rendering for the chat client: transcript, input bar, hang-up button,
 * and the six-item questionnaire (yes/no plus 6-point scales whose endpoints
 * read "Strongly disagree" / "Strongly agree"). Every system utterance is
 * rendered verbatim from the service payload.
 */

import { LIKERT_MAX_LABEL, LIKERT_MIN_LABEL, QUESTIONS, SessionStore, UiSessionView } from "./state.js";
import { QuestionnaireAnswers } from "./api.js";

export class ChatView {
  constructor(
    private readonly root: HTMLElement,
    private readonly store: SessionStore,
  ) {}

  mount(): void {
    this.store.subscribe((view) => this.render(view));
  }

  private render(view: UiSessionView): void {
    this.root.innerHTML = "";
    this.root.appendChild(this.header(view));
    if (view.error) {
      const error = el("div", "error-banner");
      error.textContent = view.error;
      this.root.appendChild(error);
    }
    switch (view.phase) {
      case "idle":
      case "connecting":
        this.root.appendChild(this.startPanel(view));
        break;
      case "chatting":
        this.root.appendChild(this.transcriptPanel(view));
        this.root.appendChild(this.inputBar(view));
        break;
      case "ended":
      case "questionnaire":
        this.root.appendChild(this.transcriptPanel(view));
        this.root.appendChild(this.questionnairePanel());
        break;
      case "done":
        this.root.appendChild(this.donePanel(view));
        break;
    }
  }

  private header(view: UiSessionView): HTMLElement {
    const header = el("header", "header");
    const title = el("h1");
    title.textContent = "Restaurant finder";
    header.appendChild(title);
    if (view.taskCard) {
      const card = el("p", "task-card");
      card.id = "task-card";
      card.textContent = view.taskCard;
      header.appendChild(card);
    }
    return header;
  }

  private startPanel(view: UiSessionView): HTMLElement {
    const panel = el("section", "start-panel");
    const button = el("button", "start-button") as HTMLButtonElement;
    button.id = "start";
    button.textContent = view.error ? "Retry" : "Start conversation";
    button.disabled = view.phase === "connecting";
    button.addEventListener("click", () => void this.store.startConversation().catch(() => undefined));
    panel.appendChild(button);
    return panel;
  }

  private transcriptPanel(view: UiSessionView): HTMLElement {
    const list = el("ol", "transcript");
    list.id = "transcript";
    for (const entry of view.transcript) {
      const item = el("li", `entry ${entry.speaker}${entry.failed ? " failed" : ""}`);
      const speaker = el("span", "speaker");
      speaker.textContent = entry.speaker === "user" ? "You" : "System";
      const text = el("span", "text");
      text.textContent = entry.text;
      item.append(speaker, text);
      if (entry.failed) {
        const mark = el("span", "unsent");
        mark.textContent = "not delivered";
        item.appendChild(mark);
      }
      list.appendChild(item);
    }
    queueMicrotask(() => {
      if (typeof list.scrollTo === "function") {
        list.scrollTo({ top: list.scrollHeight });
      }
    });
    return list;
  }

  private inputBar(view: UiSessionView): HTMLElement {
    const bar = el("form", "input-bar") as HTMLFormElement;
    const input = el("input", "text-input") as HTMLInputElement;
    input.id = "utterance";
    input.placeholder = "Type your message";
    input.autocomplete = "off";
    const send = el("button", "send-button") as HTMLButtonElement;
    send.id = "send";
    send.type = "submit";
    send.textContent = "Send";
    send.disabled = true;
    input.addEventListener("input", () => {
      send.disabled = input.value.trim().length === 0;
    });
    bar.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = input.value;
      if (!text.trim()) return;
      input.value = "";
      send.disabled = true;
      void this.store.sendTurn(text).catch(() => undefined);
    });
    const hangUp = el("button", "hangup-button") as HTMLButtonElement;
    hangUp.id = "hangup";
    hangUp.type = "button";
    hangUp.textContent = "Hang up";
    hangUp.disabled = view.transcript.length === 0;
    hangUp.addEventListener("click", () => void this.store.hangUp().catch(() => undefined));
    bar.append(input, send, hangUp);
    return bar;
  }

  private questionnairePanel(): HTMLElement {
    const panel = el("section", "questionnaire");
    panel.id = "questionnaire";
    const intro = el("p");
    intro.textContent = "Please rate the conversation, then submit to finish.";
    panel.appendChild(intro);

    const submit = el("button", "submit-button") as HTMLButtonElement;
    submit.id = "submit-questionnaire";
    submit.textContent = "Submit";
    submit.disabled = !this.store.answersComplete();
    const refresh = () => {
      submit.disabled = !this.store.answersComplete();
    };

    for (const question of QUESTIONS) {
      const block = el("fieldset", "question");
      block.id = `question-${question.key}`;
      const legend = el("legend");
      legend.textContent = question.text;
      block.appendChild(legend);
      if (question.kind === "yesno") {
        block.appendChild(this.yesNoRow(question.key, refresh));
      } else {
        block.appendChild(this.likertRow(question.key, refresh));
      }
      panel.appendChild(block);
    }

    submit.addEventListener("click", () => void this.store.submitQuestionnaire().catch(() => undefined));
    panel.appendChild(submit);
    return panel;
  }

  private yesNoRow(key: keyof QuestionnaireAnswers, refresh: () => void): HTMLElement {
    const row = el("div", "options yesno");
    for (const value of [true, false]) {
      const label = el("label") as HTMLLabelElement;
      const radio = el("input") as HTMLInputElement;
      radio.type = "radio";
      radio.name = key;
      radio.value = String(value);
      radio.addEventListener("change", () => {
        (this.store.draft[key] as boolean) = value;
        refresh();
      });
      const caption = el("span");
      caption.textContent = value ? "Yes" : "No";
      label.append(radio, caption);
      row.appendChild(label);
    }
    return row;
  }

  private likertRow(key: keyof QuestionnaireAnswers, refresh: () => void): HTMLElement {
    const row = el("div", "options likert");
    const low = el("span", "scale-label scale-min");
    low.textContent = LIKERT_MIN_LABEL;
    row.appendChild(low);
    for (let value = 1; value <= 6; value += 1) {
      const label = el("label") as HTMLLabelElement;
      const radio = el("input") as HTMLInputElement;
      radio.type = "radio";
      radio.name = key;
      radio.value = String(value);
      radio.addEventListener("change", () => {
        (this.store.draft[key] as number) = value;
        refresh();
      });
      const caption = el("span");
      caption.textContent = String(value);
      label.append(radio, caption);
      row.appendChild(label);
    }
    const high = el("span", "scale-label scale-max");
    high.textContent = LIKERT_MAX_LABEL;
    row.appendChild(high);
    return row;
  }

  private donePanel(view: UiSessionView): HTMLElement {
    const panel = el("section", "done-panel");
    panel.id = "done";
    const message = el("p");
    message.textContent = "Thank you! Your feedback was recorded.";
    const code = el("code", "completion-code");
    code.id = "completion-code";
    code.textContent = view.completionCode ?? "";
    panel.append(message, code);
    return panel;
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
