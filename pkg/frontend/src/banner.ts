// Non-blocking error banners with a retry hook.

import { el } from "./dom.js";

export function showBanner(
  host: HTMLElement,
  message: string,
  retry?: () => void,
): HTMLElement {
  const banner = el("div", { class: "banner", role: "alert" }, [
    el("span", { class: "banner-message", text: message }),
  ]);
  if (retry) {
    const button = el("button", { class: "banner-retry", text: "Retry" });
    button.addEventListener("click", () => {
      banner.remove();
      retry();
    });
    banner.append(button);
  }
  const dismiss = el("button", { class: "banner-dismiss", text: "×" });
  dismiss.addEventListener("click", () => banner.remove());
  banner.append(dismiss);
  host.append(banner);
  return banner;
}
